#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace heavytail::cli {

// Lossless decimal form of a double ("%.17g"); non-finite values print as
// nan, inf and -inf.
std::string format_double(double v);

using Cell = std::variant<double, std::int64_t, std::uint64_t, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
  std::string to_csv() const;
};

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

struct Artifact {
  std::string file;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

// Files written by one run. Everything written through it can be rolled back
// with discard(), which also removes the directory when the run created it.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir);
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;

  const std::filesystem::path& dir() const { return dir_; }
  void write(const std::string& name, const std::string& content);
  const std::vector<Artifact>& artifacts() const { return artifacts_; }
  void discard() noexcept;

 private:
  std::filesystem::path dir_;
  bool created_ = false;
  std::vector<Artifact> artifacts_;
};

}  // namespace heavytail::cli
