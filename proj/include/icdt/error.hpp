#pragma once

#include <stdexcept>
#include <string>

namespace icdt {

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Input file could not be parsed (CSV, manifest, serialized model).
class LoadError : public Error {
public:
  using Error::Error;
};

// Experiment configuration is invalid or infeasible.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Fold generation impossible for the requested k.
class FoldError : public Error {
public:
  using Error::Error;
};

// Training called on an empty or ill-typed view.
class TrainError : public Error {
public:
  using Error::Error;
};

// A merge step produced an empty rule set.
class DegenerateMergeError : public Error {
public:
  using Error::Error;
};

// An operation was called outside its contract (e.g. merging incompatible rules).
class ContractViolation : public Error {
public:
  using Error::Error;
};

}  // namespace icdt
