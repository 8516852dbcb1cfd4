#pragma once

#include <string>

namespace instmeter {

// Reads a whole file; throws DataError if it cannot be opened.
std::string read_text_file(const std::string& path);

// Writes via a temporary file in the same directory, then renames it into
// place, so readers never observe a half-written file.
void write_text_file_atomic(const std::string& path, const std::string& content);

}  // namespace instmeter
