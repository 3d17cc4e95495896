#include "simcurate/errors.hpp"

namespace simcurate {

IoError::IoError(const std::string& what, std::filesystem::path path)
    : std::runtime_error(path.empty() ? what : what + ": " + path.string()),
      path_(std::move(path)) {}

FormatError::FormatError(const std::string& what, std::filesystem::path path,
                         std::size_t line)
    : IoError(line > 0 ? what + " (line " + std::to_string(line) + ")" : what,
              std::move(path)),
      line_(line) {}

RecordError::RecordError(const std::string& record_id, const std::string& what,
                         std::filesystem::path path)
    : IoError("record '" + record_id + "': " + what, std::move(path)),
      record_id_(record_id) {}

}  // namespace simcurate
