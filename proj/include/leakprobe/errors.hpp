#pragma once

#include <stdexcept>
#include <string>

namespace leakprobe {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Unreadable corpus, roster, or output location.
class IoError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

// Network failure, timeout, HTTP 429 or 5xx. Retried by the remote client.
class TransportError : public Error {
public:
  using Error::Error;
};

// Malformed response, HTTP 400, or a decoding echo that disagrees with the
// request. Never retried.
class ProtocolError : public Error {
public:
  using Error::Error;
};

// A pair's recorded occurrence cannot be resolved against the corpus, or a
// prompt would disclose its own target.
class ProvenanceError : public Error {
public:
  using Error::Error;
};

class SamplingError : public Error {
public:
  using Error::Error;
};

class IncompatiblePatternError : public Error {
public:
  using Error::Error;
};

class UnsupportedError : public Error {
public:
  using Error::Error;
};

class InsufficientDataError : public Error {
public:
  InsufficientDataError(const std::string& what, std::size_t available)
      : Error(what), available_(available) {}

  std::size_t available() const { return available_; }

private:
  std::size_t available_;
};

} // namespace leakprobe
