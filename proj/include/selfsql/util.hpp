#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace selfsql {

using json = nlohmann::json;

// Base error; every library failure derives from this so the CLI can map
// error kinds to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error { public: using Error::Error; };
class ParseError : public Error { public: using Error::Error; };
class SchemaError : public Error { public: using Error::Error; };
class TemplateError : public Error { public: using Error::Error; };
class TransportError : public Error { public: using Error::Error; };
class CacheMissError : public Error { public: using Error::Error; };
class DegenerateVectorError : public Error { public: using Error::Error; };
class GoldInvalidError : public Error { public: using Error::Error; };
class StageOrderError : public Error { public: using Error::Error; };
class ExtractionError : public Error { public: using Error::Error; };
class QueryTimeoutError : public Error { public: using Error::Error; };
class WriteRejectedError : public Error { public: using Error::Error; };
class ExecutionError : public Error { public: using Error::Error; };
class UndefinedCorrelationError : public Error { public: using Error::Error; };

// Generation produced zero parseable triplets; keeps the raw model text for audit.
class GenerationFailedError : public Error {
public:
    GenerationFailedError(const std::string& msg, std::string raw)
        : Error(msg), raw_(std::move(raw)) {}
    const std::string& raw() const { return raw_; }

private:
    std::string raw_;
};

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool istarts_with(std::string_view s, std::string_view prefix);
bool icontains(std::string_view haystack, std::string_view needle);
std::vector<std::string> split_lines(std::string_view s);
std::string replace_all(std::string s, std::string_view from, std::string_view to);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string sha256_hex(std::string_view data);
std::uint64_t fnv1a64(std::string_view data);

std::string read_file(const std::filesystem::path& p);
// Writes via a temp file + rename so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& p, std::string_view content);

std::vector<json> read_jsonl(const std::filesystem::path& p);
void write_jsonl(const std::filesystem::path& p, const std::vector<json>& records);

// Runs f(0..n-1) on up to `workers` threads. Serial when workers <= 1.
// The first exception thrown by any worker is rethrown after all join.
void parallel_for(int n, int workers, const std::function<void(int)>& f);

} // namespace selfsql
