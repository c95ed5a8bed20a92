#pragma once

#include "robreg/core.hpp"
#include "robreg/harness.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace robreg {

/// Malformed dataset file; the message names the line.
class DataFormatError : public DomainError {
 public:
  using DomainError::DomainError;
};

struct LabelledDataset {
  Dataset data;                       // intercept column prepended
  std::vector<std::string> carriers;  // header names of the x columns
};

/// Header row, then `y, x1..x{p-1}[, source]` with source in {M1, M2}.
LabelledDataset read_dataset_csv(std::istream& in);
LabelledDataset read_dataset_csv(const std::string& path);

/// Per-row table `row,y,x...,method,flag,residual`, one block per method.
void write_fit_table(const LabelledDataset& d, const std::map<Method, MethodRun>& runs, const std::string& path);

}  // namespace robreg
