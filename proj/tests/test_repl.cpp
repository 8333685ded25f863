#include <chrono>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "krivine/repl.hpp"
#include "krivine/syntax.hpp"

using namespace krivine;
using namespace std::chrono_literals;

namespace {

struct Transcript {
    std::string out, err;
    Session session;
};

Transcript script(const std::string& input, Session session = {}) {
    std::istringstream in(input);
    EventQueue q;
    feed_lines(in, q);
    std::ostringstream out, err;
    run_repl(session, q, out, err);
    return {out.str(), err.str(), session};
}

}  // namespace

TEST_SUITE("repl") {

TEST_CASE("directives") {
    CHECK(handle_directive(":q")->kind == ReplEvent::Kind::Eof);
    CHECK(handle_directive(" :quit ")->kind == ReplEvent::Kind::Eof);
    auto w = handle_directive(":workers 4");
    CHECK(w->kind == ReplEvent::Kind::SetWorkers);
    CHECK(w->workers == 4);
    auto m = handle_directive(":mode par");
    CHECK(m->kind == ReplEvent::Kind::SetMode);
    CHECK(m->mode == EvalMode::Parallel);
    CHECK(handle_directive(":mode seq")->mode == EvalMode::Sequential);
    auto s = handle_directive(":steps 100");
    CHECK(s->kind == ReplEvent::Kind::SetBudget);
    CHECK(s->budget.max_steps == 100);
    CHECK(handle_directive(":steps off")->budget.is_unlimited());
    CHECK(handle_directive(":frobnicate")->kind == ReplEvent::Kind::Diagnostic);
    CHECK(handle_directive(":workers 0")->kind == ReplEvent::Kind::Diagnostic);
    CHECK(handle_directive(":mode fast")->kind == ReplEvent::Kind::Diagnostic);
    CHECK_FALSE(handle_directive("(\\xx)z"));
    CHECK_FALSE(handle_directive(""));
}

TEST_CASE("evaluates a line") {
    auto t = script("(\\xx)z\n");
    CHECK(t.out == "z\n");
    CHECK(t.err.empty());
    CHECK(t.session.history == std::vector<std::string>{"(\\xx)z"});
}

TEST_CASE("parse errors do not end the session") {
    auto t = script("not a term(((\n(\\xx)z\n");
    CHECK(t.err.find("parse error at offset") != std::string::npos);
    CHECK(t.out == "z\n");
    CHECK(t.session.history.size() == 2);
}

TEST_CASE("unknown directives are reported") {
    auto t = script(":frobnicate\nx\n");
    CHECK(t.err == "unknown directive :frobnicate\n");
    CHECK(t.out == "x\n");
}

TEST_CASE("settings apply to later lines") {
    auto t = script(":steps 200\n(\\x(x)x)\\x(x)x\n:mode par\n:workers 2\n:steps off\n((v)(\\xx)a)(\\xx)b\n:q\nignored\n");
    CHECK(t.out == "...\n[step budget exhausted]\n((v)a)b\n");
    CHECK(t.session.mode == EvalMode::Parallel);
    CHECK(t.session.workers == 2);
    CHECK(t.session.budget.is_unlimited());
    CHECK(t.session.history.size() == 2);
}

TEST_CASE("echo fidelity: a printed normal form evaluates to itself") {
    auto first = script("((\\x\\y((a)(x)y)(b)(y)x)\\f\\z(f)(f)z)\\f\\z(f)z\n");
    std::string nf = first.out.substr(0, first.out.size() - 1);
    auto second = script(nf + "\n");
    CHECK(alpha_equivalent(parse_term(second.out), parse_term(nf)));
}

TEST_CASE("interrupting a non-terminating line") {
    for (EvalMode mode : {EvalMode::Sequential, EvalMode::Parallel}) {
        Session s;
        s.mode = mode;
        s.workers = 2;
        EventQueue q;
        std::ostringstream out, err;
        std::thread input([&] {
            q.push(ReplEvent::line("\\f(\\x(f)(x)x)\\x(f)(x)x"));
            std::this_thread::sleep_for(50ms);
            q.push(ReplEvent::interrupt());
            q.push(ReplEvent::line("(\\xx)z"));
            q.push(ReplEvent::eof());
        });
        Repl repl(s, out, err);
        repl.run(q);
        input.join();
        std::string text = out.str();
        CHECK(text.rfind("\\v1(v1)(v1)(v1)", 0) == 0);
        CHECK(text.find("...\n[interrupted]\nz\n") != std::string::npos);
        CHECK_FALSE(q.cancel_flag().load());
        if (mode == EvalMode::Parallel) {
            REQUIRE(repl.manager());
            CHECK(repl.manager()->info().active_tasks.empty());
        }
    }
}

}
