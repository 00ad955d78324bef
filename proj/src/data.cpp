#include "strhound/data.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace strhound {

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("STRHOUND_DATA"); env && *env) return env;
  return STRHOUND_DATA_DIR;
}

std::vector<std::string> read_lines(const std::filesystem::path& p, bool comments) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (comments && line[0] == '#')) continue;
    out.push_back(line);
  }
  return out;
}

}  // namespace strhound
