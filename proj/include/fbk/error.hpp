#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fbk {

// Root of every error thrown by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller broke an operation precondition (n = 0, empty input, bad flag...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Input data does not satisfy a schema or domain invariant.
class DataError : public Error {
public:
    using Error::Error;
};

// The inference backend failed or produced unusable output.
class BackendError : public Error {
public:
    using Error::Error;
};

class InvalidFeedback : public DataError {
public:
    using DataError::DataError;
};

class ParseError : public DataError {
public:
    ParseError(std::size_t offset, std::string expected)
        : DataError("parse error at byte " + std::to_string(offset) + ": expected " + expected),
          offset_(offset),
          expected_(std::move(expected)) {}

    std::size_t offset() const noexcept { return offset_; }
    const std::string& expected() const noexcept { return expected_; }

private:
    std::size_t offset_;
    std::string expected_;
};

class SpecTooLarge : public DataError {
public:
    using DataError::DataError;
};

class NotHelperUtterance : public DataError {
public:
    explicit NotHelperUtterance(std::size_t index)
        : DataError("utterance " + std::to_string(index) + " is not a helper utterance"), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class ZeroNormEmbedding : public DataError {
public:
    explicit ZeroNormEmbedding(std::size_t row)
        : DataError("embedding row " + std::to_string(row) + " has zero norm"), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class MaskTooLarge : public DataError {
public:
    using DataError::DataError;
};

class MissingPlaceholder : public DataError {
public:
    explicit MissingPlaceholder(std::string name)
        : DataError("prompt template is missing placeholder {" + name + "}"), name_(std::move(name)) {}
    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class MergeConflict : public DataError {
public:
    using DataError::DataError;
};

class MissingScores : public DataError {
public:
    using DataError::DataError;
};

class EmptyGenerations : public DataError {
public:
    using DataError::DataError;
};

class EmptyInput : public DataError {
public:
    using DataError::DataError;
};

class ZeroVariance : public DataError {
public:
    using DataError::DataError;
};

class MismatchedSystems : public DataError {
public:
    using DataError::DataError;
};

class BackendUnavailable : public BackendError {
public:
    using BackendError::BackendError;
};

class RateLimited : public BackendError {
public:
    using BackendError::BackendError;
};

class UnparseableGeneration : public BackendError {
public:
    UnparseableGeneration(std::string reason, std::string raw)
        : BackendError("unparseable generation: " + reason), raw_(std::move(raw)) {}
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

class DegenerateMass : public BackendError {
public:
    DegenerateMass() : BackendError("both label masses are zero") {}
};

class DimensionMismatch : public BackendError {
public:
    using BackendError::BackendError;
};

}  // namespace fbk
