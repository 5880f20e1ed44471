#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace volterra {

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kHarvestHeader = "t,mean_X,sd_X,mean_p,sd_p,barrier,mean_dxi,gap_G,gap_SE";
inline constexpr const char* kForwardHeader = "t,mean_X,sd_X,mean_xi";
inline constexpr const char* kAdjointHeader = "t,mean_p,sd_p,mean_q_diag";
inline constexpr const char* kDualityHeader = "test,lhs,lhs_se,rhs,rhs_se,combined_se,pass";
inline constexpr const char* kCheckHeader = "check,value,se,tolerance,pass,note";
inline constexpr const char* kPolicyHeader = "policy,J,J_se,advantage,advantage_se,pass";
inline constexpr const char* kGapHeader = "t,gap_G,gap_SE,positive,positive_SE";

// Shortest decimal that reads back to the same double ("nan", "inf", "-inf" otherwise).
std::string format_number(double v);
// Quotes fields holding a comma, quote or newline.
std::string csv_field(const std::string& s);

class CsvWriter {
public:
  explicit CsvWriter(std::string header);

  CsvWriter& cell(double v);
  CsvWriter& cell(const std::string& s);
  CsvWriter& empty();
  CsvWriter& flag(bool b);
  void end_row();

  std::size_t rows() const noexcept { return rows_; }
  const std::string& text() const noexcept { return text_; }

private:
  void sep();
  std::string text_;
  bool fresh_ = true;
  std::size_t rows_ = 0;
};

// Writes to a temporary in the same directory, then renames over `path`.
// Creates missing parent directories. Throws IoError.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace volterra
