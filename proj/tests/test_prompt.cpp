// Copyright 2026 The viplab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_util.hpp"
#include "vip/core/error.hpp"
#include "vip/core/grad_check.hpp"
#include "vip/core/ops.hpp"
#include "vip/prompt/prompt_model.hpp"
#include "vip/tasks/tasks.hpp"

namespace {

using namespace vip;
using core::Matrix;
using core::Tape;
using core::Var;
using prompt::Variant;

prompt::ModelConfig toy_config(Variant v, int d = 16) {
  prompt::ModelConfig c;
  c.method.variant = v;
  c.method.prompt_length = 3;
  c.contextualizer.d_low = 8;
  c.contextualizer.heads = 2;
  c.contextualizer.ffn_dim = 16;
  c.quantizer.codebook_size = 6;
  c.quantizer.samples = 4;
  (void)d;
  return c;
}

std::vector<tasks::TextSample> samples(const lm::Vocab& v, int n, std::uint64_t seed = 1) {
  const auto suite = tasks::default_suite(v, 1);
  core::RngStream rng(seed, "samples");
  std::vector<tasks::TextSample> out;
  for (const auto& s : tasks::generate(suite[1].spec, n, rng)) out.push_back(tasks::to_text_to_text(s, suite[1].spec));
  return out;
}

prompt::Streams streams(std::uint64_t seed = 0) {
  return {core::RngStream(seed, "dropout"), core::RngStream(seed, "sampling")};
}

TEST(MethodConfig, InvalidCombinationsRejected) {
  auto plm = vip::testing::tiny_plm();
  auto c = toy_config(Variant::kPT);
  c.method.dedicated_codebook = true;
  EXPECT_THROW(prompt::PromptModel(c, plm, 0), Error);
  c = toy_config(Variant::kVIPIDP);
  c.method.noise_resilience = true;
  EXPECT_THROW(prompt::PromptModel(c, plm, 0), Error);
  c = toy_config(Variant::kPT);
  c.method.static_tokens = 1;
  EXPECT_THROW(prompt::PromptModel(c, plm, 0), Error);
  c = toy_config(Variant::kVIP);
  c.method.static_tokens = 3;
  EXPECT_THROW(prompt::PromptModel(c, plm, 0), Error);
  c = toy_config(Variant::kVIP);
  c.method.dedicated_codebook = true;
  c.quantizer.codebook_size = 7;
  EXPECT_THROW(prompt::PromptModel(c, plm, 0), Error);
  lm::LMConfig lc;
  core::RngStream init(1, "init");
  auto thawed = std::make_shared<const lm::LanguageModel>(lc, init);
  EXPECT_THROW(prompt::PromptModel(toy_config(Variant::kPT), thawed, 0), Error);
}

TEST(BuildInput, SequenceLengths) {
  auto plm = vip::testing::tiny_plm();
  const auto xs = samples(plm->vocab(), 3);
  for (Variant v : {Variant::kFT, Variant::kPT, Variant::kVIP, Variant::kVIPC, Variant::kVIPIDP}) {
    prompt::PromptModel m(toy_config(v), plm, 0);
    for (const auto& x : xs) {
      Tape t;
      auto st = streams();
      const auto in = m.build_input(t, x.hard(), x.content(), false, st);
      const int prompt = v == Variant::kFT ? 0 : 3;
      EXPECT_EQ(in.embeddings.rows(), static_cast<int>(x.input.size()) + prompt) << prompt::variant_name(v);
      EXPECT_EQ(in.embeddings.cols(), 16);
    }
  }
}

TEST(BuildInput, HybridSplit) {
  auto plm = vip::testing::tiny_plm();
  auto c = toy_config(Variant::kVIP);
  c.method.prompt_length = 4;
  c.method.static_tokens = 2;
  prompt::PromptModel m(c, plm, 0);
  EXPECT_EQ(m.config().resolved(16).quantizer.codebook_size, 20);
  EXPECT_EQ(m.codebook()->size(), 20);
  const auto x = samples(plm->vocab(), 1).front();
  Tape t;
  auto st = streams();
  const auto in = m.build_input(t, x.hard(), x.content(), false, st);
  EXPECT_EQ(in.contextual.rows(), 2);
  EXPECT_EQ(in.prompt_block.rows(), 4);
  EXPECT_EQ(in.prompt_block.value().topRows(2), m.prompts()->value.topRows(2));
}

// Zeroes the contextualizer output and the codebook.
void zero_cq(prompt::PromptModel& m) {
  for (core::Parameter* p : m.contextualizer()->parameters())
    if (p->name.rfind("ctx.out", 0) == 0) p->value.setZero();
  auto* cb = m.codebook();
  cb->set_state(Matrix::Zero(cb->size(), cb->dim()), cb->counts());
}

TEST(BuildInput, ZeroCqReducesToPtBitwise) {
  auto plm = vip::testing::tiny_plm();
  prompt::PromptModel vip(toy_config(Variant::kVIP), plm, 5);
  prompt::PromptModel pt(toy_config(Variant::kPT), plm, 5);
  ASSERT_EQ(vip.prompts()->value, pt.prompts()->value);
  zero_cq(vip);
  for (const auto& x : samples(plm->vocab(), 4)) {
    Tape t;
    auto s1 = streams(), s2 = streams();
    const auto a = vip.build_input(t, x.hard(), x.content(), false, s1);
    const auto b = pt.build_input(t, x.hard(), x.content(), false, s2);
    EXPECT_EQ(a.embeddings.value(), b.embeddings.value());
    const Matrix la = plm->decoder_logits(t, plm->encode(t, a.embeddings), x.target).value();
    const Matrix lb = plm->decoder_logits(t, plm->encode(t, b.embeddings), x.target).value();
    EXPECT_EQ(la, lb);
  }
}

TEST(BuildInput, PtConstantIdpDeterministic) {
  auto plm = vip::testing::tiny_plm();
  const auto xs = samples(plm->vocab(), 2);
  ASSERT_NE(xs[0].content().size() + 100 * xs[0].content()[0], xs[1].content().size() + 100 * xs[1].content()[0]);
  prompt::PromptModel pt(toy_config(Variant::kPT), plm, 0);
  prompt::PromptModel idp(toy_config(Variant::kVIPIDP), plm, 0);
  prompt::PromptModel vip(toy_config(Variant::kVIP), plm, 0);
  Tape t;
  auto s = streams();
  EXPECT_EQ(pt.build_input(t, xs[0].hard(), xs[0].content(), false, s).prompt_block.value(),
            pt.build_input(t, xs[1].hard(), xs[1].content(), false, s).prompt_block.value());
  EXPECT_EQ(idp.prompt_representation(xs[0].content()), idp.prompt_representation(xs[0].content()));
  EXPECT_GT((idp.prompt_representation(xs[0].content()) - idp.prompt_representation(xs[1].content())).norm(), 0.0);
  const Matrix a = vip.prompt_representation(xs[0].content()), b = vip.prompt_representation(xs[1].content());
  EXPECT_GT((a - b).rowwise().norm().mean(), 0.0);
}

TEST(TotalLoss, PtIsCe) {
  auto plm = vip::testing::tiny_plm();
  prompt::PromptModel pt(toy_config(Variant::kPT), plm, 0);
  const auto xs = samples(plm->vocab(), 3);
  std::vector<const tasks::TextSample*> batch{&xs[0], &xs[1], &xs[2]};
  Tape t;
  auto s = streams();
  const auto l = pt.total_loss(t, batch, true, s);
  EXPECT_EQ(l.total.scalar(), l.ce);
  EXPECT_EQ(l.commitment, 0.0);
}

TEST(TotalLoss, VipAddsHandComputedCommitment) {
  auto plm = vip::testing::tiny_plm();
  prompt::PromptModel vip(toy_config(Variant::kVIP), plm, 0);
  const auto xs = samples(plm->vocab(), 2);
  std::vector<const tasks::TextSample*> batch{&xs[0], &xs[1]};
  Tape t;
  auto s = streams();
  const auto l = vip.total_loss(t, batch, true, s);
  double hand = 0.0;
  for (std::size_t b = 0; b < 2; ++b) {
    Matrix pq = Matrix::Zero(3, 16);
    for (int i = 0; i < 3; ++i) {
      for (int k : l.assignments[b].codes[i]) pq.row(i) += vip.codebook()->embeddings().row(k);
      pq.row(i) /= 4.0;
    }
    hand += (l.contextual[b] - pq).squaredNorm();
  }
  hand /= 2.0;
  EXPECT_NEAR(l.commitment, hand, 1e-10 * std::max(1.0, hand));
  EXPECT_NEAR(l.total.scalar(), l.ce + 0.1 * hand, 1e-10 * std::max(1.0, l.total.scalar()));
}

TEST(TotalLoss, VipWithExactCodebookHasZeroCommitment) {
  auto plm = vip::testing::tiny_plm();
  auto c = toy_config(Variant::kVIP);
  c.quantizer.codebook_size = 1;
  prompt::PromptModel vip(c, plm, 0);
  for (core::Parameter* p : vip.contextualizer()->parameters())
    if (p->name.rfind("ctx.out", 0) == 0) p->value.setZero();
  auto* cb = vip.codebook();
  cb->set_state(Matrix::Zero(1, 16), cb->counts());
  const auto xs = samples(plm->vocab(), 2);
  std::vector<const tasks::TextSample*> batch{&xs[0], &xs[1]};
  Tape t;
  auto s = streams();
  const auto l = vip.total_loss(t, batch, true, s);
  EXPECT_EQ(l.commitment, 0.0);
  EXPECT_EQ(l.total.scalar(), l.ce);
}

TEST(Gradients, FullVipLossWithNoiseResilience) {
  auto plm = vip::testing::tiny_plm(8);
  auto c = toy_config(Variant::kVIP);
  c.contextualizer.d_low = 4;
  c.contextualizer.ffn_dim = 8;
  c.method.noise_resilience = true;
  prompt::PromptModel vip(c, plm, 2);
  const auto xs = samples(plm->vocab(), 2);
  std::vector<const tasks::TextSample*> batch{&xs[0], &xs[1]};
  auto params = vip.trainable_parameters();
  const oracle::VipSurrogate surrogate(vip, batch, 9);
  {
    Tape t;
    EXPECT_NEAR(surrogate(t).scalar(), surrogate.base_value(), 1e-12);
  }
  auto r = core::grad_check([&](Tape& t) { return surrogate.analytic(t); }, std::cref(surrogate), params);
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst_param << "[" << r.worst_index << "] " << r.worst_analytic << " vs "
                                   << r.worst_numeric;
  // P gets gradient from both paths; codebook none.
  Tape t;
  auto s = streams(9);
  t.param(vip.codebook()->parameter());
  for (auto* p : params) p->zero_grad();
  t.backward(vip.total_loss(t, batch, true, s).total);
  EXPECT_GT(vip.prompts()->grad.norm(), 0.0);
  const auto& g = vip.codebook()->parameter().grad;
  EXPECT_TRUE(g.size() == 0 || g.isZero(0.0));
}

TEST(Gradients, PromptReceivesGradientThroughContextualizerAlone) {
  // With the PLM path blocked (VIP-C feeds only P^c), P still learns.
  auto plm = vip::testing::tiny_plm();
  prompt::PromptModel m(toy_config(Variant::kVIPC), plm, 0);
  const auto xs = samples(plm->vocab(), 1);
  std::vector<const tasks::TextSample*> batch{&xs[0]};
  Tape t;
  auto s = streams();
  t.backward(m.total_loss(t, batch, true, s).total);
  EXPECT_GT(m.prompts()->grad.norm(), 0.0);
}

TEST(ParamCounts, FullScale) {
  lm::LMConfig big;
  big.d_model = 768;
  big.heads = 12;
  prompt::ModelConfig pt;
  pt.method.variant = Variant::kPT;
  pt.method.prompt_length = 100;
  EXPECT_EQ(prompt::count_trainable_params(pt, big), 76800u);
  prompt::ModelConfig vip;
  vip.method.prompt_length = 100;
  vip.contextualizer.d_low = 32;
  vip.contextualizer.ffn_dim = 64;
  vip.quantizer.codebook_size = 1000;
  const auto n = prompt::count_trainable_params(vip, big);
  EXPECT_EQ(n, 76800u + 67040u + 768000u);
  EXPECT_LE(std::abs(static_cast<double>(n) - 930000.0) / 930000.0, 0.05);
}

TEST(ParamCounts, ToyScaleMatchesInstances) {
  auto plm = vip::testing::tiny_plm();
  for (Variant v : {Variant::kFT, Variant::kPT, Variant::kVIP, Variant::kVIPC, Variant::kVIPIDP}) {
    prompt::PromptModel m(toy_config(v), plm, 0);
    std::size_t n = 0;
    for (const auto* p : std::as_const(m).state_parameters()) n += p->size();
    EXPECT_EQ(n, prompt::count_trainable_params(toy_config(v), plm->config())) << prompt::variant_name(v);
  }
  EXPECT_EQ(prompt::count_trainable_params(toy_config(Variant::kFT), plm->config()), plm->param_count());
}

TEST(ParamCounts, IdpWithinTwentyPercentOfVip) {
  for (int d : {16, 64, 768}) {
    lm::LMConfig lc;
    lc.d_model = d;
    lc.heads = 4;
    for (int n : {3, 10, 100}) {
      auto vip = toy_config(Variant::kVIP);
      vip.method.prompt_length = n;
      vip.contextualizer.d_low = d >= 64 ? d / 4 : 8;
      vip.contextualizer.heads = 4;
      vip.contextualizer.ffn_dim = 2 * vip.contextualizer.d_low;
      vip.quantizer.codebook_size = 10 * n;
      auto idp = vip;
      idp.method.variant = Variant::kVIPIDP;
      const double a = static_cast<double>(prompt::count_trainable_params(vip, lc));
      const double b = static_cast<double>(prompt::count_trainable_params(idp, lc));
      EXPECT_LE(std::abs(b - a) / a, 0.2) << "d=" << d << " n=" << n;
    }
  }
}

TEST(Frozen, FtOwnsThawedCopy) {
  auto plm = vip::testing::tiny_plm();
  const auto before = plm->checksum();
  prompt::PromptModel ft(toy_config(Variant::kFT), plm, 0);
  EXPECT_FALSE(ft.lm().frozen());
  for (auto* p : ft.trainable_parameters()) p->value.array() += 1.0;
  EXPECT_EQ(plm->checksum(), before);
}

}  // namespace
