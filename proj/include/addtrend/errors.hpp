#pragma once

#include <stdexcept>
#include <string>

namespace addtrend {

// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonFinite : Error {
    NonFinite() : Error("input contains NaN or infinite values") {}
    explicit NonFinite(const std::string& what) : Error(what) {}
};

// Column j of the input matrix contains tied values. Downstream difference
// operators divide by input gaps, so ties are rejected rather than jittered.
struct DuplicateInputs : Error {
    int column;
    explicit DuplicateInputs(int j)
        : Error("duplicate values in input column " + std::to_string(j)), column(j) {}
};

struct NotIncreasing : Error {
    NotIncreasing() : Error("abscissae must be strictly increasing") {}
};

struct TooShort : Error {
    explicit TooShort(int n, int k)
        : Error("need n >= k+2 (got n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")") {}
};

struct ShapeMismatch : Error {
    explicit ShapeMismatch(const std::string& what) : Error(what) {}
};

struct IndexOutOfRange : Error {
    explicit IndexOutOfRange(const std::string& what) : Error(what) {}
};

struct TooFewSamples : Error {
    explicit TooFewSamples(const std::string& what) : Error(what) {}
};

// The Gram matrix D D^T came out numerically singular.  Cannot happen for
// strictly increasing abscissae; treated as an internal error.
struct SingularGram : Error {
    SingularGram() : Error("banded Gram system is numerically singular") {}
};

struct FoldTooSmall : Error {
    explicit FoldTooSmall(int n_train, int k)
        : Error("training fold too small: n=" + std::to_string(n_train) +
                " violates n >= k+2 for k=" + std::to_string(k)) {}
};

struct ParseError : Error {
    long line;
    ParseError(long line_no, const std::string& what)
        : Error("line " + std::to_string(line_no) + ": " + what), line(line_no) {}
};

}  // namespace addtrend
