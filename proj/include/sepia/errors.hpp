#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sepia {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed proof script. `line` is 1-based; `file` is empty when the
// source text did not come from a file.
class ParseError : public Error {
public:
    ParseError(std::string file, std::size_t line, const std::string& detail)
        : Error(format(file, line, detail)), file_(std::move(file)), line_(line), detail_(detail) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    static std::string format(const std::string& file, std::size_t line, const std::string& detail) {
        return (file.empty() ? std::string("<input>") : file) + ":" + std::to_string(line) + ": " + detail;
    }

    std::string file_;
    std::size_t line_;
    std::string detail_;
};

class UnterminatedProof : public ParseError {
public:
    using ParseError::ParseError;
};

class EmptySentence : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class DanglingComposition : public Error {
public:
    using Error::Error;
};

class TooFewLemmas : public Error {
public:
    using Error::Error;
};

// Everything a prover backend can raise. The CLI maps these to exit code 2.
class ProverError : public Error {
public:
    using Error::Error;
};

class BackendUnavailable : public ProverError {
public:
    using ProverError::ProverError;
};

class UnknownLemma : public ProverError {
public:
    using ProverError::ProverError;
};

class SessionDead : public ProverError {
public:
    using ProverError::ProverError;
};

class Timeout : public ProverError {
public:
    using ProverError::ProverError;
};

class NothingToUndo : public ProverError {
public:
    using ProverError::ProverError;
};

}  // namespace sepia
