#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

namespace mixrl::io {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Streams into "<path>.tmp"; commit() renames it over `path`. Destroying an
// uncommitted writer removes the temp file, so readers never see partial output.
class AtomicWriter {
 public:
  explicit AtomicWriter(std::filesystem::path path);
  ~AtomicWriter();
  AtomicWriter(const AtomicWriter&) = delete;
  AtomicWriter& operator=(const AtomicWriter&) = delete;

  std::ostream& stream();
  void commit();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::unique_ptr<std::ofstream> out_;
  bool committed_ = false;
};

// Writes through a sibling temp file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer);
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

// Streams a JSONL file one record at a time; blank lines are skipped.
// The callback receives the parsed object and its 1-based line number.
// Throws IoError if the file cannot be opened or a line is not valid JSON.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const nlohmann::json&, std::size_t)>& fn);

}  // namespace mixrl::io
