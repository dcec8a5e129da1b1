#pragma once

// Plumbing shared by the CLI subcommands: output directories, CSV writing,
// run manifests, angle parsing and the sweep worker pool.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace bptns::cli {

/// Bad input from the user; maps to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure escalated by --strict; maps to exit code 3.
struct NumericFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// "0.6", "pi/2", "3pi/4", "-pi", "0.5*pi".
double parse_angle(const std::string &text);

/// Shortest text that reads back to the same double.
std::string format_double(double x);

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path &path, std::vector<std::string> columns);
    void row(const std::vector<std::string> &cells);

private:
    std::ofstream out_;
    std::size_t width_;
};

/// Header row first. Handles the quoting CsvWriter produces.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path &path);

class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path &path);
    void write(const nlohmann::json &record);

private:
    std::ofstream out_;
};

/// Times a run and writes manifest.json into its output directory.
class RunRecord {
public:
    RunRecord(std::string command, std::filesystem::path out_dir, nlohmann::json config);
    const std::filesystem::path &dir() const { return dir_; }
    void finish(const nlohmann::json &summary = nlohmann::json::object());

private:
    std::string command_;
    std::filesystem::path dir_;
    nlohmann::json config_;
    std::chrono::steady_clock::time_point start_;
};

/// Worker count from BPTNS_THREADS (default 1).
int worker_count();

/// Calls task(k) for k in [0, count) on up to worker_count() threads. The
/// first exception thrown is rethrown after all workers stop.
void parallel_for(int count, const std::function<void(int)> &task);

}  // namespace bptns::cli
