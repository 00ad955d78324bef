#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace strhound {

/// Directory holding the bundled word, phrase and pattern tables. The
/// STRHOUND_DATA environment variable overrides the build-time default.
std::filesystem::path data_dir();

/// Non-empty lines of a UTF-8 text file; '#' lines are skipped as comments
/// unless `comments` is false.
std::vector<std::string> read_lines(const std::filesystem::path& p, bool comments = true);

}  // namespace strhound
