#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace corrstat {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad window length, T < 10, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::size_t col, const std::string& what)
      : Error("parse error at row " + std::to_string(row) + ", column " + std::to_string(col) +
              ": " + what),
        row_(row),
        col_(col) {}

  /// 1-based line number in the file (header is row 1).
  std::size_t row() const noexcept { return row_; }
  /// 1-based column number.
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

class DuplicateTicker : public Error {
 public:
  explicit DuplicateTicker(std::string ticker)
      : Error("duplicate ticker: " + ticker), ticker_(std::move(ticker)) {}
  const std::string& ticker() const noexcept { return ticker_; }

 private:
  std::string ticker_;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ZeroVariance : public Error {
 public:
  ZeroVariance(std::string ticker, std::string window)
      : Error("zero variance for '" + ticker + "'" + (window.empty() ? "" : " in window " + window)),
        ticker_(std::move(ticker)),
        window_(std::move(window)) {}
  const std::string& ticker() const noexcept { return ticker_; }
  const std::string& window() const noexcept { return window_; }

 private:
  std::string ticker_;
  std::string window_;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

class NumericsError : public Error {
 public:
  NumericsError(const std::string& what, double achieved_error)
      : Error(what + " (achieved error estimate " + std::to_string(achieved_error) + ")"),
        achieved_error_(achieved_error) {}
  double achieved_error() const noexcept { return achieved_error_; }

 private:
  double achieved_error_;
};

class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(std::ptrdiff_t pivot, const std::string& detail = {})
      : Error("matrix is not positive definite (pivot " + std::to_string(pivot) + ")" +
              (detail.empty() ? "" : ": " + detail)),
        pivot_(pivot) {}
  std::ptrdiff_t pivot() const noexcept { return pivot_; }

 private:
  std::ptrdiff_t pivot_;
};

class IllPosed : public Error {
 public:
  IllPosed(std::ptrdiff_t n, std::ptrdiff_t t)
      : Error("minimum-variance problem is ill-posed: N=" + std::to_string(n) +
              " assets need more than N observations, got T=" + std::to_string(t)),
        n_(n),
        t_(t) {}
  std::ptrdiff_t assets() const noexcept { return n_; }
  std::ptrdiff_t observations() const noexcept { return t_; }

 private:
  std::ptrdiff_t n_;
  std::ptrdiff_t t_;
};

class NotSymmetric : public Error {
 public:
  using Error::Error;
};

class NotNormalized : public Error {
 public:
  using Error::Error;
};

class DegenerateComponent : public Error {
 public:
  DegenerateComponent(std::ptrdiff_t index, double eigenvalue)
      : Error("principal component " + std::to_string(index) + " has eigenvalue " +
              std::to_string(eigenvalue)),
        index_(index) {}
  std::ptrdiff_t index() const noexcept { return index_; }

 private:
  std::ptrdiff_t index_;
};

}  // namespace corrstat
