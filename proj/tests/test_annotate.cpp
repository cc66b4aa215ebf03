#include <set>

#include <gtest/gtest.h>

#include "fbk/annotate/annotator.hpp"
#include "support.hpp"

using namespace fbk;
using namespace fbk::annotate;

namespace {

std::vector<std::size_t> iota_from(std::size_t first, std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = first + i;
    return v;
}

const std::string kTemplate = "D:{definitions}\nE:{examples}\nC:{conversation}\nT:{targets}\nF:{format}";

}  // namespace

TEST(Chunks, DocumentedNineHelperPlan) {
    const auto plan = plan_chunks(iota_from(1, 9));
    ASSERT_EQ(plan.chunks.size(), 3u);
    EXPECT_EQ(plan.chunks[0].kept, iota_from(1, 5));
    EXPECT_EQ(plan.chunks[1].kept, iota_from(6, 3));
    EXPECT_EQ(plan.chunks[2].kept, iota_from(9, 1));
    EXPECT_EQ(plan.chunks[1].window, iota_from(4, 5));
    EXPECT_EQ(plan.chunks[2].window, iota_from(7, 3));
}

TEST(Chunks, KeptSetsPartitionForAllSizes) {
    for (std::size_t h = 1; h <= 40; ++h) {
        std::vector<std::size_t> helpers;
        for (std::size_t i = 0; i < h; ++i) helpers.push_back(2 * i + 1);
        const auto plan = plan_chunks(helpers);
        std::vector<std::size_t> kept;
        for (const auto& c : plan.chunks) {
            EXPECT_LE(c.window.size(), kChunkWindow);
            for (auto k : c.kept) EXPECT_NE(std::find(c.window.begin(), c.window.end(), k), c.window.end());
            kept.insert(kept.end(), c.kept.begin(), c.kept.end());
        }
        EXPECT_EQ(kept, helpers) << "H=" << h;
        const std::size_t expected_chunks = h <= 5 ? 1 : 1 + (h - 5 + kChunkStride - 1) / kChunkStride;
        EXPECT_EQ(plan.chunks.size(), expected_chunks) << "H=" << h;
    }
}

TEST(Chunks, Preconditions) {
    EXPECT_THROW(plan_chunks({}), PreconditionError);
    EXPECT_THROW(plan_chunks({3, 1}), PreconditionError);
}

TEST(Prompt, SinglePassSubstitution) {
    PromptParts p;
    p.definitions = "defs {examples}";
    p.examples = "ex";
    p.conversation = "[1] Helper: {targets}";
    p.targets = {1, 3};
    const auto out = assemble_prompt(kTemplate + " {unknown}", p);
    EXPECT_NE(out.find("D:defs {examples}\nE:ex\nC:[1] Helper: {targets}\nT:1, 3\nF:"), std::string::npos) << out;
    EXPECT_NE(out.find("{unknown}"), std::string::npos);
}

TEST(Prompt, MissingPlaceholderAndEmptyChunk) {
    PromptParts p;
    p.targets = {1};
    try {
        assemble_prompt("{definitions}{examples}{conversation}", p);
        FAIL();
    } catch (const MissingPlaceholder& e) {
        EXPECT_EQ(e.name(), "format");
    }
    p.targets.clear();
    EXPECT_THROW(assemble_prompt(kTemplate, p), PreconditionError);
}

TEST(ChunkResponse, ParsesTargetsIgnoresOthers) {
    const std::string text =
        "[utterance 1]\nAppropriate: yes\n\n[utterance 2]\nAppropriate: yes\n[utterance 3]\nAppropriate: no\n"
        "Goal and alignment: g\nAreas for improvement: Questions\nAlternative: a\n";
    const auto m = parse_chunk_response(text, {1, 3});
    ASSERT_EQ(m.size(), 2u);
    EXPECT_TRUE(m.at(1).appropriate);
    EXPECT_EQ(m.at(3).alternative, "a");
}

TEST(ChunkResponse, Rejects) {
    EXPECT_THROW(parse_chunk_response("Appropriate: yes\n", {1}), ParseError);
    EXPECT_THROW(parse_chunk_response("hello\n[utterance 1]\nAppropriate: yes\n", {1}), ParseError);
    EXPECT_THROW(parse_chunk_response("[utterance 1]\nAppropriate: yes\n", {1, 3}), UnparseableGeneration);
    EXPECT_THROW(parse_chunk_response("[utterance 1]\nAppropriate: yes\n[utterance 1]\nAppropriate: yes\n", {1}),
                 ParseError);
    EXPECT_THROW(parse_chunk_response("[utterance 1]\nAppropriate: no\n", {1}), InvalidFeedback);
    try {
        parse_chunk_response("[utterance 1]\nAppropriate: maybe\n", {1});
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 14u + 13u);
    }
}

TEST(Annotate, AllChunksSucceed) {
    const auto c = testkit::alternating("c", 18);
    auto gw = testkit::mock_gateway_json(R"({"default_annotation":{"appropriate":true,"positive_areas":["Empathy"]}})");
    AnnotationOptions opt;
    opt.template_text = kTemplate;
    const auto out = annotate_conversation(c, seg::Segmentation({0, 6, 12}, 18), *gw, opt);
    EXPECT_TRUE(out.complete());
    EXPECT_EQ(out.annotated.feedback.size(), 9u);
    for (const auto& [idx, fb] : out.annotated.feedback) EXPECT_EQ(c.utterances[idx].speaker, Speaker::Helper);
    EXPECT_EQ(gw->requests_sent(), 3u);
}

TEST(Annotate, MiddleChunkFailureKeepsOthers) {
    const auto c = testkit::alternating("c", 18);
    // utterance 11 only appears in the second window
    auto gw = testkit::mock_gateway_json(R"({"outages":[{"conversation":"c","utterance":11,"kind":"annotate"}]})");
    AnnotationOptions opt;
    opt.template_text = kTemplate;
    const auto out = annotate_conversation(c, seg::Segmentation::single(18), *gw, opt);
    ASSERT_EQ(out.failures.size(), 1u);
    EXPECT_EQ(out.failures[0].chunk_number, 2u);
    std::set<std::size_t> got;
    for (const auto& [idx, fb] : out.annotated.feedback) got.insert(idx);
    EXPECT_EQ(got, (std::set<std::size_t>{1, 3, 5, 7, 9, 17}));
}

TEST(Annotate, ChunkPromptStartsAtContextOfFirstMember) {
    const auto c = testkit::alternating("c", 18);
    AnnotationOptions opt;
    opt.template_text = kTemplate;
    const auto plan = plan_chunks(c.helper_indices());
    // first member of chunk 2 is utterance 7; segment [6,12) so context starts at 0 with [0,6) before it
    const auto prompt = chunk_prompt(c, seg::Segmentation({0, 6, 12}, 18), plan.chunks[1], opt);
    EXPECT_NE(prompt.find("C:[0] Seeker: seeker line 0\n"), std::string::npos);
    EXPECT_NE(prompt.find("[15] Helper: helper line 15\n\nT:7, 9, 11, 13, 15"), std::string::npos) << prompt;
    const auto p3 = chunk_prompt(c, seg::Segmentation({0, 6, 12}, 18), plan.chunks[2], opt);
    EXPECT_NE(p3.find("C:[6] Seeker"), std::string::npos);
}

TEST(Annotate, NoHelpersNoRequests) {
    const auto c = make_conversation("s", {{Speaker::Seeker, "a"}, {Speaker::Seeker, "b"}});
    auto gw = testkit::mock_gateway_json("{}");
    AnnotationOptions opt;
    opt.template_text = kTemplate;
    const auto out = annotate_conversation(c, seg::Segmentation::single(2), *gw, opt);
    EXPECT_TRUE(out.annotated.feedback.empty());
    EXPECT_EQ(gw->requests_sent(), 0u);
}
