#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace featureclock {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed files, flags or option values. The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

// Numerical failures on well-formed input. The CLI maps these to exit code 3.
class ComputationError : public Error {
 public:
  using Error::Error;
};

class RankDeficientError : public ComputationError {
 public:
  RankDeficientError(const std::string& what, std::vector<std::size_t> columns)
      : ComputationError(what), columns_(std::move(columns)) {}

  // Design-matrix columns that fell below the rank tolerance.
  const std::vector<std::size_t>& columns() const noexcept { return columns_; }

 private:
  std::vector<std::size_t> columns_;
};

class GroupTooSmallError : public ComputationError {
 public:
  GroupTooSmallError(const std::string& what, std::string group)
      : ComputationError(what), group_(std::move(group)) {}

  const std::string& group() const noexcept { return group_; }

 private:
  std::string group_;
};

class CsvError : public InputError {
 public:
  CsvError(const std::string& what, std::string path, std::size_t row,
           std::size_t column)
      : InputError(what), path_(std::move(path)), row_(row), column_(column) {}

  const std::string& path() const noexcept { return path_; }
  // 1-based data row (header excluded); 0 when the error concerns the header.
  std::size_t row() const noexcept { return row_; }
  // 1-based column; 0 when the error concerns a whole row.
  std::size_t column() const noexcept { return column_; }

 private:
  std::string path_;
  std::size_t row_;
  std::size_t column_;
};

}  // namespace featureclock
