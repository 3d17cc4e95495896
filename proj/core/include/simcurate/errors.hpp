#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

namespace simcurate {

// Caller violated a documented precondition (bad argument, inconsistent inputs).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Filesystem or data-format failure. Carries the offending path when known.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what, std::filesystem::path path = {});
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

// A file was readable but its contents were malformed; line is 1-based (0 if unknown).
class FormatError : public IoError {
 public:
  FormatError(const std::string& what, std::filesystem::path path, std::size_t line);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Dataset-level failure attributable to one record.
class RecordError : public IoError {
 public:
  RecordError(const std::string& record_id, const std::string& what,
              std::filesystem::path path = {});
  const std::string& record_id() const noexcept { return record_id_; }

 private:
  std::string record_id_;
};

// Generation or captioning service failure. Retryable errors (timeouts, 503)
// may be re-attempted; the rest are final for the request that caused them.
class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& what, bool retryable)
      : std::runtime_error(what), retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

}  // namespace simcurate
