#include "qvi/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include <openssl/evp.h>

#include "qvi/errors.hpp"

namespace qvi {

namespace {

// values stay on one line
std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '\n') {
      out += "\\n";
    } else if (c == '\\') {
      out += "\\\\";
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_vector(const Vec& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out + "]";
}

void Report::text(const std::string& key, const std::string& value) { lines_.emplace_back(key, escape(value)); }
void Report::number(const std::string& key, double value) { lines_.emplace_back(key, format_double(value)); }
void Report::integer(const std::string& key, long long value) { lines_.emplace_back(key, std::to_string(value)); }
void Report::flag(const std::string& key, bool value) { lines_.emplace_back(key, value ? "true" : "false"); }
void Report::vector(const std::string& key, const Vec& value) { lines_.emplace_back(key, format_vector(value)); }

void Report::list(const std::string& key, const std::vector<std::string>& values) {
  integer(key + ".count", static_cast<long long>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) text(key + "." + std::to_string(i), values[i]);
}

std::string Report::str() const {
  std::string out;
  for (const auto& [k, v] : lines_) out += k + " = " + v + "\n";
  return out;
}

std::map<std::string, std::string> parse_report(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
    out[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return out;
}

Vec parse_report_vector(const std::string& value) {
  if (value.size() < 2 || value.front() != '[' || value.back() != ']') {
    throw Error(Errc::InvalidInput, "not a report vector: " + value);
  }
  std::vector<double> xs;
  std::istringstream in(value.substr(1, value.size() - 2));
  std::string item;
  while (std::getline(in, item, ',')) {
    char* end = nullptr;
    xs.push_back(std::strtod(item.c_str(), &end));
  }
  Vec v(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) v[static_cast<Eigen::Index>(i)] = xs[i];
  return v;
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::InvalidInput, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

}  // namespace qvi
