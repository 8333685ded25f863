#include "krivine/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include "krivine/compile.hpp"
#include "krivine/parallel.hpp"

namespace krivine::bench {

Term church(std::uint32_t n) {
    Term body = var("z");
    for (std::uint32_t i = 0; i < n; ++i) body = app(var("f"), std::move(body));
    return lam("f", lam("z", std::move(body)));
}

Term gen_exponential(std::uint32_t m, std::uint32_t n) {
    if (m < 1 || n < 1) throw std::invalid_argument("gen_exponential: m and n must be >= 1");
    // ((a)(x)y)(b)(y)x
    Term body = app(app(var("a"), app(var("x"), var("y"))), app(var("b"), app(var("y"), var("x"))));
    Term combinator = lam("x", lam("y", std::move(body)));
    return app(app(std::move(combinator), church(m)), church(n));
}

Term gen_identities(std::uint32_t y_count, std::uint32_t id_count) {
    if (y_count < 1 || id_count < 1) throw std::invalid_argument("gen_identities: counts must be >= 1");
    Term spine = var("x");
    for (std::uint32_t i = 0; i < y_count; ++i) spine = app(std::move(spine), var("y"));
    Term chain = var("z");
    for (std::uint32_t i = 0; i < id_count; ++i) chain = app(lam("i", var("i")), std::move(chain));
    return app(lam("y", std::move(spine)), std::move(chain));
}

std::chrono::duration<double> median(std::vector<std::chrono::duration<double>> times) {
    if (times.empty()) return {};
    std::sort(times.begin(), times.end());
    std::size_t mid = times.size() / 2;
    if (times.size() % 2 == 1) return times[mid];
    return (times[mid - 1] + times[mid]) / 2.0;
}

BenchResult run_bench(const BenchSpec& spec) {
    BenchResult result;
    result.spec = spec;

    Term generated = std::visit(
        [](const auto& f) {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, Exponential>)
                return gen_exponential(f.m, f.n);
            else
                return gen_identities(f.y_count, f.id_count);
        },
        spec.family);
    // Parsing and compilation stay outside the timed region.
    CTerm compiled = compile(parse_term(pretty(generated)));

    std::unique_ptr<Manager> manager;
    ParallelOptions opts;
    if (spec.mode == EvalMode::Parallel) {
        manager = std::make_unique<Manager>(spec.workers);
        opts.workers = spec.workers;
        opts.granularity = spec.granularity;
        opts.buffered = spec.buffered;
    }

    for (std::size_t run = 0; run < spec.runs; ++run) {
        CountingSink sink;
        StreamStatus status;
        std::uint64_t parses_before = parse_invocations();
        auto start = std::chrono::steady_clock::now();
        if (manager)
            status = par_normalize_stream(compiled, *manager, opts, spec.budget, sink).status;
        else
            status = normalize_stream(compiled, spec.budget, sink);
        auto stop = std::chrono::steady_clock::now();
        result.parses_in_timed_region += parse_invocations() - parses_before;

        result.all_times.push_back(stop - start);
        result.output_size = sink.count;
        if (status != StreamStatus::Done) ++result.failed_runs;
    }
    result.median_wall_time = median(result.all_times);
    return result;
}

namespace {

const char* mode_name(EvalMode m) { return m == EvalMode::Parallel ? "par" : "seq"; }

struct Row {
    std::string family, p1, p2, mode, workers, median, tokens, failed;
};

Row row_of(const BenchResult& r) {
    Row row;
    if (const auto* e = std::get_if<Exponential>(&r.spec.family)) {
        row.family = "exp";
        row.p1 = std::to_string(e->m);
        row.p2 = std::to_string(e->n);
    } else {
        const auto& i = std::get<Identities>(r.spec.family);
        row.family = "id";
        row.p1 = std::to_string(i.y_count);
        row.p2 = std::to_string(i.id_count);
    }
    row.mode = mode_name(r.spec.mode);
    row.workers = std::to_string(r.spec.mode == EvalMode::Parallel ? r.spec.workers : 1);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", r.median_wall_time.count());
    row.median = buf;
    row.tokens = std::to_string(r.output_size);
    row.failed = std::to_string(r.failed_runs);
    return row;
}

}  // namespace

// Columns: family, its two parameters (m,n or ys,ids), mode, workers, median
// seconds, output tokens, failed runs.
std::string report(const std::vector<BenchResult>& results, ReportFormat format) {
    const Row header{"family", "m|ys", "n|ids", "mode", "workers", "median_s", "tokens", "failed"};
    std::vector<Row> rows{header};
    for (const auto& r : results) rows.push_back(row_of(r));

    std::ostringstream out;
    if (format == ReportFormat::Csv) {
        out << "family,param1,param2,mode,workers,median_s,tokens,failed_runs\n";
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const Row& r = rows[i];
            out << r.family << ',' << r.p1 << ',' << r.p2 << ',' << r.mode << ',' << r.workers << ',' << r.median
                << ',' << r.tokens << ',' << r.failed << '\n';
        }
        return out.str();
    }

    auto fields = [](const Row& r) {
        return std::vector<const std::string*>{&r.family, &r.p1, &r.p2, &r.mode, &r.workers, &r.median, &r.tokens, &r.failed};
    };
    std::vector<std::size_t> width(8, 0);
    for (const auto& r : rows) {
        auto f = fields(r);
        for (std::size_t c = 0; c < f.size(); ++c) width[c] = std::max(width[c], f[c]->size());
    }
    for (const auto& r : rows) {
        auto f = fields(r);
        out << '|';
        for (std::size_t c = 0; c < f.size(); ++c) out << ' ' << std::setw(static_cast<int>(width[c])) << std::left << *f[c] << " |";
        out << '\n';
    }
    return out.str();
}

}  // namespace krivine::bench
