#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fwcorpus {

// Quotes a CSV field when it contains a separator, quote or newline.
std::string csv_escape(std::string_view field);
std::string csv_line(const std::vector<std::string>& fields);

// Splits one CSV line honoring double quotes.
std::vector<std::string> csv_split(std::string_view line);

// Fixed-width plain text table for terminal output.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header);

  void add_row(std::vector<std::string> row);
  void add_rule();
  std::string render() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;  // empty row = rule
};

std::string format_fixed(double v, int decimals);
std::string format_percent(double fraction);  // integer percent, e.g. "52%"

}  // namespace fwcorpus
