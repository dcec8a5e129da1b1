#include "run_support.hpp"

#include <sys/resource.h>

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <regex>
#include <thread>

#ifndef BPTNS_GIT_DESCRIBE
#define BPTNS_GIT_DESCRIBE "unknown"
#endif

namespace bptns::cli {

double parse_angle(const std::string &text) {
    static const std::regex pi_re(R"(^\s*([+-]?(?:\d+\.?\d*|\.\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$)");
    std::smatch m;
    if (std::regex_match(text, m, pi_re)) {
        double coef = 1.0;
        const std::string c = m[1];
        if (c == "-") {
            coef = -1.0;
        } else if (!c.empty() && c != "+") {
            coef = std::stod(c);
        }
        const double den = m[2].matched ? std::stod(m[2]) : 1.0;
        if (den == 0.0) {
            throw UsageError("angle has a zero denominator: " + text);
        }
        return coef * std::numbers::pi / den;
    }
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &used);
    } catch (const std::exception &) {
        throw UsageError("not an angle: " + text);
    }
    if (used != text.size() || !std::isfinite(value)) {
        throw UsageError("not an angle: " + text);
    }
    return value;
}

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, res.ptr};
}

CsvWriter::CsvWriter(const std::filesystem::path &path, std::vector<std::string> columns)
    : out_(path), width_(columns.size()) {
    if (!out_) {
        throw UsageError("cannot write " + path.string());
    }
    row(columns);
}

void CsvWriter::row(const std::vector<std::string> &cells) {
    if (cells.size() != width_) {
        throw std::logic_error("CSV row has the wrong number of cells");
    }
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const std::string &c = cells[k];
        out_ << (k ? "," : "");
        if (c.find_first_of(",\"\n") == std::string::npos) {
            out_ << c;
            continue;
        }
        out_ << '"';
        for (char ch : c) {
            out_ << (ch == '"' ? "\"\"" : std::string(1, ch));
        }
        out_ << '"';
    }
    out_ << '\n';
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot read " + path.string());
    }
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells(1);
        bool quoted = false;
        for (std::size_t k = 0; k < line.size(); ++k) {
            const char ch = line[k];
            if (quoted) {
                if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') {
                    cells.back() += '"';
                    ++k;
                } else if (ch == '"') {
                    quoted = false;
                } else {
                    cells.back() += ch;
                }
            } else if (ch == '"') {
                quoted = true;
            } else if (ch == ',') {
                cells.emplace_back();
            } else {
                cells.back() += ch;
            }
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

JsonlWriter::JsonlWriter(const std::filesystem::path &path) : out_(path) {
    if (!out_) {
        throw UsageError("cannot write " + path.string());
    }
}

void JsonlWriter::write(const nlohmann::json &record) { out_ << record.dump() << '\n'; }

RunRecord::RunRecord(std::string command, std::filesystem::path out_dir, nlohmann::json config)
    : command_(std::move(command)),
      dir_(std::move(out_dir)),
      config_(std::move(config)),
      start_(std::chrono::steady_clock::now()) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) {
        throw UsageError("cannot create output directory " + dir_.string() + ": " + ec.message());
    }
}

void RunRecord::finish(const nlohmann::json &summary) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    rusage usage{};
    getrusage(RUSAGE_SELF, &usage);
    nlohmann::json m;
    m["command"] = command_;
    m["git_describe"] = BPTNS_GIT_DESCRIBE;
    m["config"] = config_;
    m["wall_seconds"] = wall;
    m["peak_memory_kib"] = usage.ru_maxrss;
    m["threads"] = worker_count();
    m["summary"] = summary;
    std::ofstream(dir_ / "manifest.json") << m.dump(2) << '\n';
}

int worker_count() {
    const char *env = std::getenv("BPTNS_THREADS");
    if (env == nullptr || *env == '\0') {
        return 1;
    }
    int n = 0;
    const auto res = std::from_chars(env, env + std::char_traits<char>::length(env), n);
    if (res.ec != std::errc() || n < 1) {
        throw UsageError(std::string("BPTNS_THREADS must be a positive integer, got '") + env + "'");
    }
    return n;
}

void parallel_for(int count, const std::function<void(int)> &task) {
    const int workers = std::min(worker_count(), count);
    if (workers <= 1) {
        for (int k = 0; k < count; ++k) {
            task(k);
        }
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int k = next++; k < count; k = next++) {
                try {
                    task(k);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                    next = count;
                }
            }
        });
    }
    pool.clear();
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}  // namespace bptns::cli
