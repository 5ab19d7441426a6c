#pragma once

#include <string>

namespace pipestab {

// Writes content to a temporary sibling and renames it over path. Throws
// IoError with the path on failure.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace pipestab
