#pragma once

#include <stdexcept>
#include <string>

namespace agentnet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidSeed : public Error {
 public:
  using Error::Error;
};
class InvalidKey : public Error {
 public:
  using Error::Error;
};
class InvalidCapabilityPath : public Error {
 public:
  using Error::Error;
};
class NotOwner : public Error {
 public:
  using Error::Error;
};
class InvalidWindow : public Error {
 public:
  using Error::Error;
};
class StaleVersion : public Error {
 public:
  using Error::Error;
};
class PushUnavailable : public Error {
 public:
  using Error::Error;
};
class NotFound : public Error {
 public:
  using Error::Error;
};
class PolicyDenied : public Error {
 public:
  using Error::Error;
};
class EmptyNetwork : public Error {
 public:
  using Error::Error;
};
class MergeDomainError : public Error {
 public:
  using Error::Error;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};
class RecordInvalid : public Error {
 public:
  using Error::Error;
};

}  // namespace agentnet
