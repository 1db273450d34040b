// cli_io.hpp - run configuration, output tables and the command-line driver

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tlc/dynamics.hpp"
#include "tlc/qubit_core.hpp"

namespace tlc {

// Bad flag, key or value; maps to exit code 1.
struct UsageError : DomainError {
    using DomainError::DomainError;
};

using KeyValues = std::map<std::string, std::string>;

// Flat key = value text. Also reads the metadata block of a table written by
// this tool ("# key = value" lines of a CSV, or the first JSON-lines record),
// skipping its data rows, so any output can be fed back as a config.
KeyValues parse_config(std::istream& in);
KeyValues load_config_file(const std::string& path);

struct RunConfig {
    PhysParams params;
    QuadratureConfig quad;
    IntegratorConfig integ;
    std::uint64_t seed{42};
};

// Fills defaults for absent keys; validates the global keys only.
RunConfig run_config_from(const KeyValues& kv);

// Shortest round-trip decimal form; nan, inf, -inf for non-finite values.
std::string format_number(double v);
double parse_number(const std::string& s, const std::string& key);

using Cell = std::variant<double, std::int64_t, std::string>;

struct OutputTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    std::vector<std::pair<std::string, std::string>> metadata;
};

enum class Format { Csv, JsonLines };

std::string csv_quote(const std::string& field);
void write_csv(const OutputTable& t, std::ostream& os);
void write_jsonl(const OutputTable& t, std::ostream& os);
void write_table(const OutputTable& t, Format f, std::ostream& os);

// Metadata keys that describe a run's results rather than its inputs.
bool is_result_key(const std::string& key);

// Entry point of the tlc tool. Exit codes: 0 success, 1 usage, 2 numerical failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace tlc
