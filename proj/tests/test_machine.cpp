#include <sstream>

#include "doctest.h"
#include "krivine/compile.hpp"
#include "krivine/machine.hpp"
#include "krivine/syntax.hpp"
#include "support/generators.hpp"
#include "support/oracle.hpp"

using namespace krivine;

namespace {

using K = OutputToken::Kind;

const char* kFix = "(\\f(\\x(f)(x)x)\\x(f)(x)x)f";
const char* kTwoBranch = "(\\w((a)w)(b)w)(\\y(z)(y)y)\\y(z)(y)y";
const char* kOmega = "(\\x(x)x)\\x(x)x";

std::vector<OutputToken> stream(const CTerm& c, StepBudget budget, StreamStatus* status = nullptr) {
    VectorSink sink;
    StreamStatus s = normalize_stream(c, budget, sink);
    if (status) *status = s;
    return sink.tokens;
}

}  // namespace

TEST_SUITE("machine") {

TEST_CASE("application pushes a closure") {
    CTermBuilder b;
    auto fn = b.free("a");
    auto arg = b.free("b");
    CTerm c = std::move(b).build(b.application(fn, arg));
    MachineState s = MachineState::start(c);
    CHECK(s.stack.empty());
    CHECK(s.env.is_root());
    CHECK(step(c.program(), s) == StepOutcome::Continue);
    CHECK(s.control == fn);
    REQUIRE(s.stack.size() == 1);
    CHECK(s.stack.back().term == arg);
    CHECK(s.stack.back().env.is_root());
    CHECK(step(c.program(), s) == StepOutcome::HaltFree);
}

TEST_CASE("abstraction pops into a new frame, variable fetches from it") {
    CTerm c = compile(parse_term("(\\xx)z"));
    MachineState s = MachineState::start(c);
    CHECK(step(c.program(), s) == StepOutcome::Continue);  // push z
    CHECK(step(c.program(), s) == StepOutcome::Continue);  // λ1 pops it
    CHECK(s.stack.empty());
    REQUIRE(s.env);
    CHECK(s.env->closures().size() == 1);
    CHECK(step(c.program(), s) == StepOutcome::Continue);  // fetch [1, 1]
    CHECK(c.program()[s.control].kind == CNode::Kind::Free);
    CHECK(s.env.is_root());
    CHECK(step(c.program(), s) == StepOutcome::HaltFree);
}

TEST_CASE("frame order: xi1 is the top of the stack") {
    // ((\x\y y) a) b  ->  b
    CTerm c = compile(parse_term("((\\x\\yy)a)b"));
    auto tokens = stream(c, StepBudget::unlimited());
    CHECK(render(c.program(), tokens) == "b");
}

TEST_CASE("under-applied abstraction halts") {
    CTerm c = compile(parse_term("\\xx"));
    MachineState s = MachineState::start(c);
    CHECK(step(c.program(), s) == StepOutcome::HaltLambda);
}

TEST_CASE("step is deterministic") {
    CTerm c = compile(parse_term("((\\x\\y((a)(x)y)(b)(y)x)\\f\\z(f)(f)z)\\f\\z(f)z"));
    MachineState s1 = MachineState::start(c);
    MachineState s2 = MachineState::start(c);
    for (int i = 0; i < 50; ++i) {
        auto o1 = step(c.program(), s1);
        auto o2 = step(c.program(), s2);
        REQUIRE(o1 == o2);
        REQUIRE(s1.control == s2.control);
        REQUIRE(s1.env.is_root() == s2.env.is_root());
        if (s1.env) REQUIRE(s1.env->closures().size() == s2.env->closures().size());
        REQUIRE(s1.stack.size() == s2.stack.size());
        for (std::size_t k = 0; k < s1.stack.size(); ++k) REQUIRE(s1.stack[k].term == s2.stack[k].term);
        if (o1 != StepOutcome::Continue) break;
    }
}

TEST_CASE("fetch past the root raises IndexError") {
    CTermBuilder b;
    CTerm bad = std::move(b).build(b.bound(1, 1));
    MachineState s = MachineState::start(bad);
    CHECK_THROWS_AS(step(bad.program(), s), IndexError);

    CTermBuilder b2;
    auto body = b2.bound(2, 1);
    CTerm bad2 = std::move(b2).build(b2.application(b2.abstraction(1, body), b2.free("a")));
    VectorSink sink;
    CHECK_THROWS_AS(normalize_stream(bad2, StepBudget::unlimited(), sink), IndexError);
}

TEST_CASE("golden evaluations") {
    auto x = normalize(parse_term("x"));
    CHECK(x.status == StreamStatus::Done);
    CHECK(*x.term == var("x"));
    CHECK(x.rendered == "x");

    auto id = normalize(parse_term("\\xx"));
    CHECK(alpha_equivalent(*id.term, parse_term("\\xx")));

    auto z = normalize(parse_term("(\\xz)(\\x(x)x)\\x(x)x"));
    CHECK(z.status == StreamStatus::Done);
    CHECK(*z.term == var("z"));

    auto fix = normalize(parse_term(kFix), StepBudget::steps(1000));
    CHECK(fix.status == StreamStatus::BudgetExhausted);
    CHECK(fix.rendered.rfind("(f)(f)(f)", 0) == 0);
}

TEST_CASE("first three head emissions of the fixpoint") {
    CTerm c = compile(parse_term(kFix));
    auto tokens = stream(c, StepBudget::steps(10'000));
    std::vector<OutputToken> prefix;
    int heads = 0;
    for (const auto& t : tokens) {
        prefix.push_back(t);
        if (t.kind == K::HeadVar) ++heads;
        if (heads == 3 && t.kind == K::ArgStart) break;
    }
    CHECK(render(c.program(), prefix) == "(f)(f)(f)");
}

TEST_CASE("two-branch term streams the first branch") {
    auto r = normalize(parse_term(kTwoBranch), StepBudget::steps(100'000));
    CHECK(r.status == StreamStatus::BudgetExhausted);
    CHECK(r.rendered.rfind("((a)(z)(z)(z)", 0) == 0);
}

TEST_CASE("readback under lambdas") {
    CTerm c = compile(parse_term("\\x\\y(y)x"));
    auto tokens = stream(c, StepBudget::unlimited());
    std::vector<OutputToken> expect{
        {K::HeadLambda, 2, Var{Var::Kind::Fresh, 1}},
        {K::HeadVar, 1, Var{Var::Kind::Fresh, 2}},
        {K::ArgStart},
        {K::HeadVar, 0, Var{Var::Kind::Fresh, 1}},
        {K::ArgEnd},
    };
    CHECK(tokens == expect);
    CHECK(render(c.program(), tokens) == "\\v1\\v2(v2)v1");
    CHECK(alpha_equivalent(read_back(c.program(), tokens), parse_term("\\x\\y(y)x")));
    CHECK(alpha_equivalent(*oracle::normalize(parse_term("\\x\\y(y)x")), read_back(c.program(), tokens)));
}

TEST_CASE("partially applied group pads the rest") {
    auto r = normalize(parse_term("(\\x\\y(y)x)a"));
    CHECK(alpha_equivalent(*r.term, parse_term("\\y(y)a")));
}

TEST_CASE("fresh names skip free names") {
    auto r = normalize(parse_term("\\x(v1)x"));
    CHECK(r.rendered == "\\v2(v1)v2");
}

TEST_CASE("Church exponentiation 3^2") {
    auto r = normalize(app(gen::church(2), gen::church(3)));
    REQUIRE(r.status == StreamStatus::Done);
    CHECK(alpha_equivalent(*r.term, gen::church(9)));
}

TEST_CASE("call by name discards a diverging argument") {
    auto r = normalize(app(parse_term("\\xz"), parse_term(kOmega)), StepBudget::steps(100));
    CHECK(r.status == StreamStatus::Done);
    CHECK(*r.term == var("z"));
    CHECK(r.steps < 10);
}

TEST_CASE("omega exhausts its budget with a truncation marker") {
    auto r = normalize(parse_term(kOmega), StepBudget::steps(500));
    CHECK(r.status == StreamStatus::BudgetExhausted);
    CHECK(r.rendered == "...");
    CHECK(r.steps == 500);
}

TEST_CASE("cancellation") {
    std::atomic<bool> flag{true};
    auto r = normalize(parse_term(kFix), StepBudget::unlimited(), Interrupt{&flag});
    CHECK(r.status == StreamStatus::Cancelled);
}

TEST_CASE("renderer flushes partial output") {
    CTerm c = compile(parse_term("(f)\\x(x)(y)z"));
    std::ostringstream out;
    Renderer r(c.program(), out, true);
    normalize_stream(c, StepBudget::unlimited(), r);
    CHECK(out.str() == "(f)\\v1(v1)(y)z");
}

TEST_CASE("is_normal") {
    CHECK(is_normal(parse_term("\\x(x)(y)z")));
    CHECK_FALSE(is_normal(parse_term("(f)(\\xx)z")));
}

TEST_CASE("property: agreement with the substitution oracle") {
    gen::TermGen g(31);
    int checked = 0;
    for (int i = 0; checked < 600 && i < 20'000; ++i) {
        Term t = g.sized(60);
        auto expect = oracle::normalize(t);
        if (!expect) continue;
        ++checked;
        auto got = normalize(t, StepBudget::steps(50'000'000));
        INFO(pretty(t));
        REQUIRE(got.status == StreamStatus::Done);
        REQUIRE(alpha_equivalent(*got.term, *expect));
        REQUIRE(is_normal(*got.term));
    }
    CHECK(checked == 600);
}

TEST_CASE("property: no redex in completed results") {
    gen::TermGen g(32);
    int done = 0;
    for (int i = 0; i < 3000 && done < 500; ++i) {
        Term t = g.sized(60);
        auto r = normalize(t, StepBudget::steps(20'000));
        if (r.status != StreamStatus::Done) continue;
        ++done;
        REQUIRE(is_normal(*r.term));
        REQUIRE(parse_term(r.rendered) == *r.term);
    }
    CHECK(done == 500);
}

TEST_CASE("property: streams under a smaller budget are prefixes") {
    gen::TermGen g(33);
    for (int i = 0; i < 500; ++i) {
        Term t = (i % 10 == 0) ? parse_term(i % 20 ? kFix : kTwoBranch) : g.sized(60);
        CTerm c = compile(t);
        std::uint64_t small = g.uniform(0, 300);
        std::uint64_t large = small + g.uniform(1, 3000);
        auto a = stream(c, StepBudget::steps(small));
        auto b = stream(c, StepBudget::steps(large));
        if (!a.empty() && a.back().kind == K::Truncated) a.pop_back();
        INFO(pretty(t));
        REQUIRE(a.size() <= b.size());
        REQUIRE(std::equal(a.begin(), a.end(), b.begin()));
    }
}

TEST_CASE("deep identity chain normalizes without recursion") {
    Term chain = var("z");
    for (int i = 0; i < 200'000; ++i) chain = app(lam("i", var("i")), chain);
    auto r = normalize(app(lam("y", app(app(var("x"), var("y")), var("y"))), chain));
    CHECK(r.rendered == "((x)z)z");
}

TEST_CASE("large outputs read back") {
    // (C6)C6 = C(6^6): 46656 nested applications in the result.
    auto r = normalize(app(gen::church(6), gen::church(6)));
    REQUIRE(r.status == StreamStatus::Done);
    CHECK(r.term->size() == 2 + 2 * 46656 + 1);
}

}
