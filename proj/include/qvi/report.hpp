#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qvi/common.hpp"

namespace qvi {

/// Ordered "key = value" document. Numbers are written with 17 significant
/// digits so that they read back to the same double.
class Report {
 public:
  void text(const std::string& key, const std::string& value);
  void number(const std::string& key, double value);
  void integer(const std::string& key, long long value);
  void flag(const std::string& key, bool value);
  void vector(const std::string& key, const Vec& value);
  void list(const std::string& key, const std::vector<std::string>& values);

  std::string str() const;

 private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

std::string format_double(double v);
std::string format_vector(const Vec& v);

/// Reads a report back into key -> raw value. Later keys win.
std::map<std::string, std::string> parse_report(const std::string& text);
Vec parse_report_vector(const std::string& value);

std::string sha256_hex(const std::string& data);

}  // namespace qvi
