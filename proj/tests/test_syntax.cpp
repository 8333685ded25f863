#include <string>

#include "doctest.h"
#include "krivine/syntax.hpp"
#include "support/generators.hpp"
#include "support/oracle.hpp"

using namespace krivine;

TEST_SUITE("syntax") {

TEST_CASE("variable") { CHECK(parse_term("x") == var("x")); }

TEST_CASE("identity abstraction") { CHECK(parse_term("\\xx") == lam("x", var("x"))); }

TEST_CASE("applied identity") { CHECK(parse_term("(\\xx)z") == app(lam("x", var("x")), var("z"))); }

TEST_CASE("fixpoint tree") {
    Term half = lam("x", app(var("f"), app(var("x"), var("x"))));
    CHECK(parse_term("\\f(\\x(f)(x)x)\\x(f)(x)x") == lam("f", app(half, half)));
}

TEST_CASE("empty input is an error") {
    CHECK_THROWS_AS(parse_term(""), ParseError);
    CHECK_THROWS_AS(parse_term("   "), ParseError);
}

TEST_CASE("error offsets") {
    try {
        parse_term("(x)y )");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 5);
        CHECK(e.expected() == "end of input");
    }
    try {
        parse_term("(\\xx");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 4);
        CHECK(e.expected() == "')'");
    }
    try {
        parse_term("\\(x)x");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 1);
        CHECK(e.expected() == "binder");
    }
    CHECK_THROWS_AS(parse_term("not a term((("), ParseError);
    CHECK_THROWS_AS(parse_term("(x)"), ParseError);
    CHECK_THROWS_AS(parse_term("X"), ParseError);
}

TEST_CASE("binders are one letter plus digits") {
    CHECK(parse_term("\\xy") == lam("x", var("y")));
    CHECK(parse_term("\\x1x1") == lam("x1", var("x1")));
    CHECK(parse_term("\\x foo") == lam("x", var("foo")));
    CHECK(parse_term("\\xfoo") == lam("x", var("foo")));
    CHECK(parse_term("(foo)bar2") == app(var("foo"), var("bar2")));
}

TEST_CASE("whitespace between tokens") {
    CHECK(parse_term("  ( \\x  x ) \n z ") == app(lam("x", var("x")), var("z")));
}

TEST_CASE("prefix parse returns the rest") {
    auto r = parse_prefix("xy");
    CHECK(r.value == var("xy"));
    CHECK(r.rest.empty());
    auto r2 = parse_prefix("(x)y )z");
    CHECK(r2.value == app(var("x"), var("y")));
    CHECK(std::string(r2.rest) == " )z");
}

TEST_CASE("a bare identifier is a variable") {
    auto r = parse_prefix("abc");
    CHECK(r.value.is_variable());
    CHECK(r.value.name() == "abc");
}

TEST_CASE("identifier predicates") {
    CHECK(is_identifier("x"));
    CHECK(is_identifier("foo12"));
    CHECK_FALSE(is_identifier(""));
    CHECK_FALSE(is_identifier("1x"));
    CHECK_FALSE(is_identifier("xY"));
    CHECK(is_binder_name("x12"));
    CHECK_FALSE(is_binder_name("xy"));
    CHECK_THROWS_AS(Term::variable("Bad"), std::invalid_argument);
    CHECK_THROWS_AS(Term::abstraction("xy", var("x")), std::invalid_argument);
}

TEST_CASE("pretty") {
    CHECK(pretty(var("x")) == "x");
    CHECK(pretty(lam("x", var("x"))) == "\\xx");
    CHECK(pretty(app(lam("x", var("x")), var("z"))) == "(\\xx)z");
    CHECK(pretty(parse_term("\\f(\\x(f)(x)x)\\x(f)(x)x")) == "\\f(\\x(f)(x)x)\\x(f)(x)x");
}

TEST_CASE("free variables") {
    CHECK(free_variables(var("x")) == std::set<std::string>{"x"});
    CHECK(free_variables(lam("x", var("x"))).empty());
    CHECK(free_variables(parse_term("\\x(f)(x)x")) == std::set<std::string>{"f"});
    CHECK(free_variables(parse_term("(\\xx)x")) == std::set<std::string>{"x"});
}

TEST_CASE("size") {
    CHECK(var("x").size() == 1);
    CHECK(parse_term("(\\xx)z").size() == 4);
}

TEST_CASE("property: pretty/parse round trip") {
    gen::TermGen g(11);
    for (int i = 0; i < 600; ++i) {
        Term t = (i % 2) ? g.sized(60) : g.wide(60);
        INFO(pretty(t));
        REQUIRE(parse_term(pretty(t)) == t);
    }
}

TEST_CASE("property: consumed prefix reparses to the same value") {
    gen::TermGen g(12);
    const char* tails[] = {"", " )", " junk", ")(x"};
    for (int i = 0; i < 500; ++i) {
        std::string text = pretty(g.sized(40)) + tails[i % 4];
        auto r = parse_prefix(text);
        std::string consumed = text.substr(0, text.size() - r.rest.size());
        INFO(text);
        REQUIRE(parse_term(consumed) == r.value);
    }
}

TEST_CASE("property: free variables agree with the recursive clauses") {
    gen::TermGen g(13);
    for (int i = 0; i < 500; ++i) {
        Term t = g.wide(60);
        REQUIRE(free_variables(t) == oracle::free_vars(t));
    }
}

TEST_CASE("deep terms do not exhaust the stack") {
    const int depth = 200'000;
    std::string text;
    for (int i = 0; i < depth; ++i) text += "(\\ii)";
    text += "z";
    Term t = parse_term(text);
    CHECK(t.size() == std::size_t(depth) * 3 + 1);
    CHECK(pretty(t) == text);
    CHECK(free_variables(t) == std::set<std::string>{"z"});
    CHECK(t == parse_term(text));

    std::string lams;
    for (int i = 0; i < depth; ++i) lams += "\\x";
    lams += "x";
    CHECK(parse_term(lams).size() == std::size_t(depth) + 1);
}

}
