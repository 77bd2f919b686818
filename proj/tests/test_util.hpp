#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace testutil {

// Scratch directory per test binary; files are overwritten freely.
inline std::filesystem::path scratch_dir(const std::string& suite) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "hgrade-tests" / suite;
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path write_file(const std::string& suite, const std::string& name,
                                        const std::string& content) {
  const std::filesystem::path p = scratch_dir(suite) / name;
  std::ofstream out(p, std::ios::binary);
  out << content;
  return p;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace testutil
