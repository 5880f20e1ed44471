#include "volterra/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <system_error>

#include <unistd.h>

namespace volterra {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // folds -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

CsvWriter::CsvWriter(std::string header) : text_(std::move(header)) { text_ += '\n'; }

void CsvWriter::sep() {
  if (!fresh_) text_ += ',';
  fresh_ = false;
}

CsvWriter& CsvWriter::cell(double v) {
  sep();
  text_ += format_number(v);
  return *this;
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  sep();
  text_ += csv_field(s);
  return *this;
}

CsvWriter& CsvWriter::empty() {
  sep();
  return *this;
}

CsvWriter& CsvWriter::flag(bool b) {
  sep();
  text_ += b ? "pass" : "fail";
  return *this;
}

void CsvWriter::end_row() {
  text_ += '\n';
  fresh_ = true;
  ++rows_;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp, ec);
      throw IoError("write to '" + tmp.string() + "' failed");
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw IoError("cannot move output into place at '" + path.string() + "': " + ec.message());
  }
}

}  // namespace volterra
