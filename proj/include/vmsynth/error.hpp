#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace vmsynth {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input that violates an operation's precondition.
class InputError : public Error {
public:
    using Error::Error;
};

class LoadError : public Error {
public:
    LoadError(std::string file, std::string field, const std::string& what)
        : Error(file + (field.empty() ? "" : " [" + field + "]") + ": " + what),
          file_(std::move(file)), field_(std::move(field)) {}

    const std::string& file() const { return file_; }
    const std::string& field() const { return field_; }

private:
    std::string file_;
    std::string field_;
};

class ParseError : public Error {
public:
    ParseError(int line, int column, std::vector<std::string> expected, const std::string& found,
               const std::string& message = {});

    int line() const { return line_; }
    int column() const { return column_; }
    const std::vector<std::string>& expected() const { return expected_; }

private:
    int line_;
    int column_;
    std::vector<std::string> expected_;
};

class ValidationError : public Error {
public:
    ValidationError(std::string stage, const std::string& what)
        : Error("stage '" + stage + "': " + what), stage_(std::move(stage)) {}

    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

class SamplingExhausted : public Error {
public:
    SamplingExhausted(std::size_t achieved, std::size_t requested)
        : Error("placement sampling exhausted: achieved " + std::to_string(achieved) + " of " +
                std::to_string(requested)),
          achieved_(achieved), requested_(requested) {}

    std::size_t achieved() const { return achieved_; }
    std::size_t requested() const { return requested_; }

private:
    std::size_t achieved_;
    std::size_t requested_;
};

class DegenerateGeometry : public Error {
public:
    using Error::Error;
};

class EvaluationError : public Error {
public:
    using Error::Error;
};

// Episode directory that does not match the on-disk format.
class EpisodeFormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace vmsynth
