#pragma once

#include <stdexcept>
#include <string>

namespace emorep {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Manifest/descriptor-file problems carry the offending location so callers
// can point the user at the exact row and field.
class ManifestError : public Error {
public:
    ManifestError(const std::string& msg, long row, std::string field)
        : Error(msg + " (row " + std::to_string(row) + ", field '" + field + "')"),
          row_(row),
          field_(std::move(field)) {}

    long row() const { return row_; }
    const std::string& field() const { return field_; }

private:
    long row_;
    std::string field_;
};

}  // namespace emorep
