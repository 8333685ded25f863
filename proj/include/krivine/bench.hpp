#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "krivine/repl.hpp"
#include "krivine/syntax.hpp"

namespace krivine::bench {

/// `((\x\y((a)(x)y)(b)(y)x) Cm) Cn`: the head `a` gets two independent
/// arguments, (Cm)Cn and (b)(Cn)Cm, whose normal forms are C(n^m) and C(m^n).
struct Exponential {
    std::uint32_t m = 6;
    std::uint32_t n = 6;
};

/// `(\y(...((x)y)y...)y) (\ii)(\ii)...(\ii)z`: y_count copies of y after the
/// head x, each denoting a chain of id_count identity applications.
struct Identities {
    std::uint32_t y_count = 1;
    std::uint32_t id_count = 200'000;
};

struct BenchSpec {
    std::variant<Exponential, Identities> family;
    EvalMode mode = EvalMode::Sequential;
    std::size_t workers = 1;
    std::size_t runs = 10;
    std::uint32_t granularity = 16;
    bool buffered = false;
    StepBudget budget;
};

struct BenchResult {
    BenchSpec spec;
    std::chrono::duration<double> median_wall_time{};
    std::vector<std::chrono::duration<double>> all_times;
    std::uint64_t output_size = 0;  // tokens of one run
    std::size_t failed_runs = 0;
    /// Parser invocations observed inside timed regions (expected 0).
    std::uint64_t parses_in_timed_region = 0;
};

/// \f\z(f)...(f)z with n applications.
Term church(std::uint32_t n);

Term gen_exponential(std::uint32_t m, std::uint32_t n);
Term gen_identities(std::uint32_t y_count, std::uint32_t id_count);

/// Midpoint median; the input need not be sorted.
std::chrono::duration<double> median(std::vector<std::chrono::duration<double>> times);

/// Parses and compiles once (untimed), then times `runs` normalizations.
BenchResult run_bench(const BenchSpec& spec);

enum class ReportFormat { Table, Csv };

std::string report(const std::vector<BenchResult>& results, ReportFormat format);

}  // namespace krivine::bench
