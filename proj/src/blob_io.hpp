#pragma once

// Internal little-endian byte helpers shared by the persistence code.

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "miniaxie/errors.hpp"

namespace miniaxie::detail {

template <typename T>
void put(std::string& out, T value) {
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T, typename Error = CheckpointError>
T get(std::string_view& data, const std::string& what) {
  if (data.size() < sizeof(T)) throw Error("truncated blob while reading " + what);
  T value;
  std::memcpy(&value, data.data(), sizeof(T));
  data.remove_prefix(sizeof(T));
  return value;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (!in.good() && !in.eof()) throw ConfigError("failed reading " + path);
  return std::move(buf).str();
}

inline void write_file(const std::string& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.flush();
  if (!out.good()) throw ConfigError("failed writing " + path);
}

}  // namespace miniaxie::detail
