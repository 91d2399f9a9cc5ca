#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace irtrank {

// Base for every error the library raises on bad input or impossible requests.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedCell : public Error {
 public:
  MalformedCell(std::size_t row, std::size_t col, const std::string& value)
      : Error("malformed cell at row " + std::to_string(row) + ", column " + std::to_string(col) +
              ": '" + value + "' is not 0 or 1"),
        row_(row),
        col_(col) {}

  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DuplicateRespondent : public Error {
 public:
  explicit DuplicateRespondent(const std::string& name)
      : Error("duplicate respondent '" + name + "'") {}
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class TieError : public Error {
 public:
  using Error::Error;
};

class TooManyItems : public Error {
 public:
  explicit TooManyItems(std::size_t items)
      : Error("matrix has " + std::to_string(items) +
              " items; item estimation requires fewer than 1000"),
        items_(items) {}

  std::size_t items() const { return items_; }

 private:
  std::size_t items_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class TooFewPlayers : public Error {
 public:
  using Error::Error;
};

}  // namespace irtrank
