#pragma once

#include <stdexcept>
#include <string>

namespace bodyscan {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class EmptyTargetError : public Error {
public:
  EmptyTargetError() : Error("nearest neighbor query against an empty cloud") {}
};

class EmptyMeshError : public Error {
public:
  EmptyMeshError() : Error("mesh has no triangles") {}
};

class ResolutionTooCoarseError : public Error {
public:
  explicit ResolutionTooCoarseError(const std::string& what) : Error(what) {}
};

class JointLimitError : public Error {
public:
  explicit JointLimitError(const std::string& what) : Error(what) {}
};

class DegenerateMotionsError : public Error {
public:
  explicit DegenerateMotionsError(const std::string& what) : Error(what) {}
};

class NoCandidatesError : public Error {
public:
  explicit NoCandidatesError(const std::string& what) : Error(what) {}
};

class EmptyDictionaryError : public Error {
public:
  EmptyDictionaryError() : Error("configuration dictionary holds no records") {}
  explicit EmptyDictionaryError(const std::string& what) : Error(what) {}
};

class UnreachableError : public Error {
public:
  explicit UnreachableError(const std::string& what) : Error(what) {}
};

class NoFramesError : public Error {
public:
  NoFramesError() : Error("no scan frames supplied") {}
};

class InsufficientOverlapError : public Error {
public:
  explicit InsufficientOverlapError(const std::string& what) : Error(what) {}
};

class CoarseAlignmentFailureError : public Error {
public:
  explicit CoarseAlignmentFailureError(const std::string& what) : Error(what) {}
};

class NoKneeError : public Error {
public:
  explicit NoKneeError(const std::string& what) : Error(what) {}
};

class EmptyReferenceError : public Error {
public:
  EmptyReferenceError() : Error("reference cloud is empty") {}
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace bodyscan
