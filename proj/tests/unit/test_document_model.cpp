#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "polyvector/document_model.hpp"
#include "polyvector/errors.hpp"
#include "polyvector/ingestion.hpp"
#include "polyvector/roman.hpp"
#include "support/synthetic_corpus.hpp"

namespace pv = polyvector;

namespace {

const pv::NormIdentity kCrfb{
    "Constituição da República Federativa do Brasil de 1988", "CRFB",
    "urn:lex:br:federal:constituicao:1988-10-05;1988"};

struct TreeBuilder {
    pv::DocumentTree tree;

    explicit TreeBuilder(pv::NormIdentity norm = kCrfb) { tree.norm = std::move(norm); }

    pv::UnitId add(pv::UnitKind kind, std::string ordinal, std::optional<pv::UnitId> parent,
                   std::string own_text = "texto") {
        pv::StructuralUnit unit;
        unit.id = static_cast<pv::UnitId>(tree.units.size());
        unit.kind = kind;
        unit.ordinal = std::move(ordinal);
        unit.parent = parent;
        unit.own_text = std::move(own_text);
        if (parent) {
            tree.units[*parent].children.push_back(unit.id);
        } else {
            tree.top_level.push_back(unit.id);
        }
        tree.units.push_back(unit);
        return unit.id;
    }

    pv::DocumentTree done() {
        tree.finalize();
        return tree;
    }
};

// Independent roman-numeral oracle: table-driven digit expansion.
std::string roman_oracle(int n) {
    static const char* ones[] = {"", "I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX"};
    static const char* tens[] = {"", "X", "XX", "XXX", "XL", "L", "LX", "LXX", "LXXX", "XC"};
    static const char* hundreds[] = {"", "C", "CC", "CCC", "CD", "D", "DC", "DCC", "DCCC", "CM"};
    static const char* thousands[] = {"", "M", "MM", "MMM"};
    return std::string(thousands[n / 1000]) + hundreds[n / 100 % 10] + tens[n / 10 % 10] +
           ones[n % 10];
}

}  // namespace

TEST_CASE("roman numerals round-trip against an independent oracle") {
    for (int n = 1; n <= 3999; ++n) {
        std::string numeral = pv::roman::from_arabic(n);
        CHECK(numeral == roman_oracle(n));
        auto back = pv::roman::to_arabic(numeral);
        REQUIRE(back.has_value());
        CHECK(*back == n);
    }
    CHECK_FALSE(pv::roman::to_arabic("IIII").has_value());
    CHECK_FALSE(pv::roman::to_arabic("").has_value());
    CHECK_FALSE(pv::roman::to_arabic("ABC").has_value());
    CHECK_FALSE(pv::roman::to_arabic("IXI").has_value());
}

TEST_CASE("ordinal normalization strips suffixes") {
    CHECK(pv::normalize_ordinal("5º") == "5");
    CHECK(pv::normalize_ordinal("51.") == "51");
    CHECK(pv::normalize_ordinal("103-A.") == "103a");
    CHECK(pv::normalize_ordinal("4°") == "4");
}

TEST_CASE("article-anchored canonical labels") {
    TreeBuilder b;
    auto art5 = b.add(pv::UnitKind::Article, "5º", std::nullopt, "Art. 5º");
    auto caput = b.add(pv::UnitKind::Caput, "", art5, "Todos são iguais perante a lei:");
    auto inc19 = b.add(pv::UnitKind::Inciso, "XIX", caput, "XIX – texto do inciso;");
    auto tree = b.done();

    auto label = pv::build_label(tree, inc19);
    CHECK(label.canonical ==
          "Constituição da República Federativa do Brasil de 1988, Artigo 5º, Inciso XIX");
    CHECK(label.display == "CRFB, Art. 5º, caput, Inciso XIX");

    auto caput_label = pv::build_label(tree, caput);
    CHECK(caput_label.canonical ==
          "Constituição da República Federativa do Brasil de 1988, Artigo 5º, caput");
    CHECK(caput_label.display == "CRFB, Art. 5º, caput");
}

TEST_CASE("grouping labels carry the full path") {
    TreeBuilder b;
    auto tit = b.add(pv::UnitKind::Title, "VI", std::nullopt, "TÍTULO VI");
    auto cap = b.add(pv::UnitKind::Chapter, "II", tit, "CAPÍTULO II");
    auto sec = b.add(pv::UnitKind::Section, "II", cap, "Seção II");
    auto tree = b.done();

    auto label = pv::build_label(tree, sec);
    CHECK(label.canonical ==
          "Constituição da República Federativa do Brasil de 1988, TÍTULO VI, CAPÍTULO II, "
          "Seção II");
    CHECK(label.display == "CRFB, TÍTULO VI, CAPÍTULO II, Seção II");
}

TEST_CASE("display label for a caput") {
    TreeBuilder b;
    auto art3 = b.add(pv::UnitKind::Article, "3º", std::nullopt, "Art. 3º");
    auto caput = b.add(pv::UnitKind::Caput, "", art3, "Constituem objetivos fundamentais:");
    auto tree = b.done();
    CHECK(pv::build_label(tree, caput).display == "CRFB, Art. 3º, caput");
}

TEST_CASE("urn fragments follow the lowercase underscore grammar") {
    TreeBuilder b;
    auto art60 = b.add(pv::UnitKind::Article, "60.", std::nullopt, "Art. 60.");
    auto par4 = b.add(pv::UnitKind::Paragraph, "4º", art60, "§ 4º Não será objeto:");
    auto inc1 = b.add(pv::UnitKind::Inciso, "I", par4, "I – a forma federativa;");
    auto art7 = b.add(pv::UnitKind::Article, "7º", std::nullopt, "Art. 7º");
    auto par1u = b.add(pv::UnitKind::SoleParagraph, "único", art7, "Parágrafo único. Texto.");
    auto tit8 = b.add(pv::UnitKind::Title, "VIII", std::nullopt, "TÍTULO VIII");
    auto cap8 = b.add(pv::UnitKind::Chapter, "VIII", tit8, "CAPÍTULO VIII");
    auto tree = b.done();

    CHECK(pv::build_urn(tree, par4).value ==
          "urn:lex:br:federal:constituicao:1988-10-05;1988!art60_par4");
    CHECK(pv::build_urn(tree, inc1).fragment == "art60_par4_inc1");
    CHECK(pv::build_urn(tree, par1u).fragment == "art7_par1u");
    CHECK(pv::build_urn(tree, cap8).fragment == "tit8_cap8");
    CHECK(pv::build_urn(tree, tit8).fragment == "tit8");
    CHECK(pv::build_urn(tree, art60).fragment == "art60");
}

TEST_CASE("section and subsection fragments extend the grouping chain") {
    TreeBuilder b;
    auto tit = b.add(pv::UnitKind::Title, "IV", std::nullopt);
    auto cap = b.add(pv::UnitKind::Chapter, "I", tit);
    auto sec = b.add(pv::UnitKind::Section, "VIII", cap);
    auto sub = b.add(pv::UnitKind::Subsection, "I", sec);
    auto tree = b.done();
    CHECK(pv::build_urn(tree, sub).fragment == "tit4_cap1_sec8_sub1");
}

TEST_CASE("identifier plus label concatenation") {
    TreeBuilder b;
    auto art2 = b.add(pv::UnitKind::Article, "2º", std::nullopt, "Art. 2º");
    auto art5 = b.add(pv::UnitKind::Article, "5º", std::nullopt, "Art. 5º");
    auto caput = b.add(pv::UnitKind::Caput, "", art5, "Texto.");
    auto inc1 = b.add(pv::UnitKind::Inciso, "I", caput, "I – texto;");
    auto tree = b.done();

    CHECK(pv::build_identifier_plus_label_display(tree, art2) ==
          "urn:lex:br:federal:constituicao:1988-10-05;1988!art2, CRFB, Art. 2º");
    CHECK(pv::build_identifier_plus_label_display(tree, inc1) ==
          "urn:lex:br:federal:constituicao:1988-10-05;1988!art5_cpt_inc1, CRFB, Art. 5º, caput, "
          "Inciso I");
    CHECK(pv::build_identifier_plus_label(tree, inc1) ==
          "urn:lex:br:federal:constituicao:1988-10-05;1988!art5_cpt_inc1, Constituição da "
          "República Federativa do Brasil de 1988, Artigo 5º, Inciso I");
}

TEST_CASE("empty article ordinal is a structural error") {
    TreeBuilder b;
    auto art = b.add(pv::UnitKind::Article, "", std::nullopt, "Art.");
    auto tree = b.done();
    CHECK_THROWS_AS((void)pv::build_urn(tree, art), pv::Error);
    CHECK_THROWS_AS((void)pv::build_identifier_plus_label(tree, art), pv::Error);
}

TEST_CASE("non-roman inciso ordinal is a structural error") {
    TreeBuilder b;
    auto art = b.add(pv::UnitKind::Article, "1º", std::nullopt);
    auto caput = b.add(pv::UnitKind::Caput, "", art);
    auto inc = b.add(pv::UnitKind::Inciso, "7", caput);
    auto tree = b.done();
    CHECK_THROWS_WITH_AS((void)pv::build_urn(tree, inc),
                         doctest::Contains("not a roman numeral"), pv::Error);
}

TEST_CASE("labels are deterministic byte for byte") {
    auto corpus = pv::testsupport::make_synthetic_corpus();
    auto parsed = pv::parse_document(corpus.text, corpus.norm);
    for (const auto& unit : parsed.tree.units) {
        auto first = pv::build_label(parsed.tree, unit.id);
        auto second = pv::build_label(parsed.tree, unit.id);
        REQUIRE(first.canonical == second.canonical);
        REQUIRE(first.display == second.display);
    }
}

TEST_CASE("urn fragments are unique across a parsed tree") {
    auto corpus = pv::testsupport::make_synthetic_corpus();
    auto parsed = pv::parse_document(corpus.text, corpus.norm);
    std::set<std::string> fragments;
    for (const auto& unit : parsed.tree.units) {
        auto urn = pv::build_urn(parsed.tree, unit.id);
        CHECK(urn.value == corpus.norm.urn_base + "!" + urn.fragment);
        REQUIRE(fragments.insert(urn.fragment).second);
    }
    CHECK(fragments.size() == parsed.tree.units.size());
}

TEST_CASE("inciso fragments agree with the roman oracle") {
    auto corpus = pv::testsupport::make_synthetic_corpus();
    auto parsed = pv::parse_document(corpus.text, corpus.norm);
    for (const auto& unit : parsed.tree.units) {
        if (unit.kind != pv::UnitKind::Inciso) continue;
        int expected = 0;
        for (int n = 1; n <= 50; ++n) {
            if (roman_oracle(n) == unit.ordinal) {
                expected = n;
                break;
            }
        }
        REQUIRE(expected > 0);
        auto fragment = pv::build_urn(parsed.tree, unit.id).fragment;
        auto pos = fragment.rfind("_inc");
        REQUIRE(pos != std::string::npos);
        CHECK(fragment.substr(pos + 4) == std::to_string(expected));
    }
}

TEST_CASE("norm identity invariants") {
    CHECK_THROWS_AS((pv::NormIdentity{"", "X", "urn:lex:x"}.validate()), pv::Error);
    CHECK_THROWS_AS((pv::NormIdentity{"Nome", "X", ""}.validate()), pv::Error);
    CHECK_THROWS_AS((pv::NormIdentity{"Nome", "X", "urn:lex:x!frag"}.validate()), pv::Error);
    CHECK_NOTHROW(kCrfb.validate());
}
