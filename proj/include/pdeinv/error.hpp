#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pdeinv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or inconsistent input data.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A dense or sparse factorization hit a non-positive pivot.
class NotPositiveDefinite : public Error {
public:
    NotPositiveDefinite(std::size_t index, const std::string& what)
        : Error(what), index_(index) {}
    [[nodiscard]] std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// A tall matrix was found to have (numerically) dependent columns.
class RankDeficient : public Error {
public:
    RankDeficient(std::size_t column, const std::string& what)
        : Error(what), column_(column) {}
    [[nodiscard]] std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

/// An iterative or direct solver failed to deliver a solution.
class SolverError : public Error {
public:
    using Error::Error;
};

}  // namespace pdeinv
