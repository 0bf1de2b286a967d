#pragma once

#include <stdexcept>
#include <string>

namespace prism {

// Base of every error the toolkit throws. The CLI maps categories onto exit
// codes: usage/config -> 1, data/validation -> 2, statistical degeneracy -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, int line, const std::string& message)
      : Error(path + ":" + std::to_string(line) + ": " + message), path_(path), line_(line) {}

  const std::string& path() const noexcept { return path_; }
  int line() const noexcept { return line_; }

 private:
  std::string path_;
  int line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

// A record failed validation. line is 1-based, 0 when the record did not come from a file.
class ValidationError : public DataError {
 public:
  ValidationError(int line, std::string doc_id, std::string field, const std::string& message)
      : DataError("line " + std::to_string(line) + " doc '" + doc_id + "' field '" + field +
                  "': " + message),
        line_(line),
        doc_id_(std::move(doc_id)),
        field_(std::move(field)),
        detail_(message) {}

  int line() const noexcept { return line_; }
  const std::string& doc_id() const noexcept { return doc_id_; }
  const std::string& field() const noexcept { return field_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  int line_;
  std::string doc_id_;
  std::string field_;
  std::string detail_;
};

class StatisticalError : public Error {
 public:
  using Error::Error;
};

class DegenerateVarianceError : public StatisticalError {
 public:
  using StatisticalError::StatisticalError;
};

class TooManyDegenerateResamples : public StatisticalError {
 public:
  using StatisticalError::StatisticalError;
};

class ZeroVarianceDifferences : public StatisticalError {
 public:
  using StatisticalError::StatisticalError;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace prism
