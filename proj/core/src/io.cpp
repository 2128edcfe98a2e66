#include "mixrl/io.hpp"

#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mixrl/log.hpp"

namespace mixrl {

namespace {
std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}
LogSink& sink() {
  static LogSink s = [](LogLevel level, std::string_view message) {
    const char* tag = level == LogLevel::Info ? "info" : level == LogLevel::Warning ? "warning" : "error";
    std::clog << tag << ": " << message << '\n';
  };
  return s;
}
}  // namespace

LogSink set_log_sink(LogSink s) {
  std::lock_guard lock(sink_mutex());
  std::swap(sink(), s);
  return s;
}

void log(LogLevel level, std::string_view message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(level, message);
}

namespace io {

AtomicWriter::AtomicWriter(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  tmp_ = path_;
  tmp_ += ".tmp";
  out_ = std::make_unique<std::ofstream>(tmp_, std::ios::binary | std::ios::trunc);
  if (!*out_) throw IoError("cannot write '" + tmp_.string() + "'");
}

AtomicWriter::~AtomicWriter() {
  if (committed_) return;
  out_.reset();
  std::error_code ec;
  std::filesystem::remove(tmp_, ec);
}

std::ostream& AtomicWriter::stream() { return *out_; }

void AtomicWriter::commit() {
  out_->flush();
  if (!*out_) throw IoError("write failed for '" + tmp_.string() + "'");
  out_->close();
  std::error_code ec;
  std::filesystem::rename(tmp_, path_, ec);
  if (ec) throw IoError("cannot move '" + tmp_.string() + "' into place: " + ec.message());
  committed_ = true;
}

void write_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer) {
  AtomicWriter w(path);
  writer(w.stream());
  w.commit();
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  write_atomic(path, [&](std::ostream& out) { out << content; });
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": invalid JSON (" + e.what() + ")");
    }
    fn(j, line_no);
  }
}

}  // namespace io
}  // namespace mixrl
