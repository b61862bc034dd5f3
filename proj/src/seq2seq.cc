// Copyright 2026 The Lark Authors. All Rights Reserved.
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

#include "lark/seq2seq.h"

#include <cmath>

#include "lark/decoding.h"

namespace lark {

Params AttentionSeq2Seq::DefaultParams() {
  Params p = BaseTask::TaskDefaultParams();
  p.Set("cls", ParamValue(kClass));
  p.Define("vocab_size", int64_t{0}, "");
  p.Define("embedding_dim", int64_t{32}, "");
  p.Define("hidden_dim", int64_t{32}, "");
  p.Define("attention_dim", int64_t{32}, "");
  p.Define("bos_id", int64_t{1}, "");
  p.Define("eos_id", int64_t{2}, "");
  p.Define("beam_size", int64_t{1}, "1 = greedy decoding");
  p.Define("max_decode_len", int64_t{0}, "0 = source length plus two");
  return p;
}

AttentionSeq2Seq::AttentionSeq2Seq(const Params& p) : BaseTask(p) {
  const int64_t v = params().GetInt("vocab_size");
  const int64_t d = params().GetInt("embedding_dim");
  const int64_t h = params().GetInt("hidden_dim");
  const int64_t a = params().GetInt("attention_dim");
  LARK_CHECK(v > 0 && d > 0 && h > 0 && a > 0);

  Params emb = Embedding::DefaultParams();
  emb.Set("vocab_size", ParamValue(v));
  emb.Set("embedding_dim", ParamValue(d));
  CreateChild("enc_emb", emb);
  CreateChild("dec_emb", emb);

  Params enc_cell = LSTMCell::DefaultParams();
  enc_cell.Set("input_dim", ParamValue(d));
  enc_cell.Set("hidden_dim", ParamValue(h));
  Params enc_rnn = RNN::DefaultParams();
  enc_rnn.Set("cell", ParamValue(enc_cell));
  CreateChild("enc_rnn", enc_rnn);

  Params dec_cell = LSTMCell::DefaultParams();
  dec_cell.Set("input_dim", ParamValue(d + h));
  dec_cell.Set("hidden_dim", ParamValue(h));
  CreateChild("dec_cell", dec_cell);

  Params atten = AdditiveAttention::DefaultParams();
  atten.Set("query_dim", ParamValue(h));
  atten.Set("source_dim", ParamValue(h));
  atten.Set("hidden_dim", ParamValue(a));
  CreateChild("dec_atten", atten);

  Params softmax = SoftmaxLayer::DefaultParams();
  softmax.Set("input_dim", ParamValue(2 * h));
  softmax.Set("num_classes", ParamValue(v));
  CreateChild("dec_softmax", softmax);
}

Tensor AttentionSeq2Seq::Encode(const NestedMap& theta, const Tensor& src_ids,
                                const Tensor& src_paddings) const {
  const int64_t b = src_ids.dim(0), t = src_ids.dim(1);
  const int64_t d = params().GetInt("embedding_dim");
  Tensor flat_ids = Reshape(src_ids, {b * t});
  NestedMap emb_in;
  emb_in.Set("ids", flat_ids);
  Tensor emb = child("enc_emb")->FProp(theta.sub("enc_emb"), emb_in).tensor("embeddings");
  NestedMap rnn_in;
  rnn_in.Set("act", Reshape(emb, {b, t, d}));
  rnn_in.Set("paddings", src_paddings);
  return child("enc_rnn")->FProp(theta.sub("enc_rnn"), rnn_in).tensor("out");
}

Tensor AttentionSeq2Seq::DecoderStep(const NestedMap& theta, const Tensor& prev_ids,
                                     const Tensor& enc_out, const Tensor& src_paddings,
                                     const Tensor& step_padding, Tensor* m,
                                     Tensor* c) const {
  NestedMap emb_in;
  emb_in.Set("ids", prev_ids);
  Tensor emb = child("dec_emb")->FProp(theta.sub("dec_emb"), emb_in).tensor("embeddings");

  NestedMap atten_in;
  atten_in.Set("query", *m);
  atten_in.Set("source", enc_out);
  atten_in.Set("source_paddings", src_paddings);
  Tensor context = child("dec_atten")
                       ->FProp(theta.sub("dec_atten"), atten_in)
                       .tensor("context");

  NestedMap cell_in;
  cell_in.Set("act", Concat({emb, context}, 1));
  cell_in.Set("padding", step_padding);
  cell_in.Set("m", *m);
  cell_in.Set("c", *c);
  NestedMap state = child("dec_cell")->FProp(theta.sub("dec_cell"), cell_in);
  *m = state.tensor("m");
  *c = state.tensor("c");

  const auto* softmax = child_as<SoftmaxLayer>("dec_softmax");
  return softmax->Logits(theta.sub("dec_softmax"), Concat({*m, context}, 1));
}

std::unique_ptr<InputGenerator> AttentionSeq2Seq::MakeInput(const Params& input_params) const {
  auto tokenizer = std::make_shared<const VocabFileTokenizer>(
      VocabFileTokenizer::Load(input_params.GetParams("tokenizer")));
  return std::make_unique<InputGenerator>(input_params,
                                          MakeSeq2SeqProcessor(tokenizer, dtype()));
}

TaskLoss AttentionSeq2Seq::FPropLoss(const NestedMap& theta, const NestedMap& batch) const {
  const NestedMap& src = batch.sub("src");
  const NestedMap& tgt = batch.sub("tgt");
  const Tensor& src_paddings = src.tensor("paddings");
  const Tensor& tgt_ids = tgt.tensor("ids");
  const int64_t b = tgt_ids.dim(0), t_len = tgt_ids.dim(1);
  const int64_t h = params().GetInt("hidden_dim");

  Tensor enc_out = Encode(theta, src.tensor("ids"), src_paddings);

  Tensor m = Tensor::Zeros({b, h}, enc_out.dtype());
  Tensor c = m;
  Tensor nll = Tensor::Zeros({}, enc_out.dtype());
  Tensor weight = nll;
  for (int64_t t = 0; t < t_len; ++t) {
    Tensor prev_ids = Reshape(Slice(tgt_ids, 1, t, 1), {b});
    Tensor step_padding = Reshape(Slice(tgt.tensor("paddings"), 1, t, 1), {b});
    Tensor logits = DecoderStep(theta, prev_ids, enc_out, src_paddings, step_padding, &m, &c);
    CrossEntropyResult xent =
        CrossEntropy(logits, Reshape(Slice(tgt.tensor("labels"), 1, t, 1), {b}),
                     Reshape(Slice(tgt.tensor("weights"), 1, t, 1), {b}));
    nll = Add(nll, xent.nll_sum);
    weight = Add(weight, xent.weight_sum);
  }

  TaskLoss out;
  out.nll = nll;
  out.weight = weight;
  const double w = weight.scalar();
  out.metrics.Set("loss", MakeMetric(w > 0.0 ? nll.scalar() / w : 0.0, w));
  return out;
}

NestedMap AttentionSeq2Seq::DecodeBatch(const NestedMap& theta, const NestedMap& batch) const {
  const NestedMap& src = batch.sub("src");
  const NestedMap& tgt = batch.sub("tgt");
  const Tensor& src_paddings = src.tensor("paddings");
  const Tensor& labels = tgt.tensor("labels");
  const Tensor& weights = tgt.tensor("weights");
  const int64_t b = labels.dim(0), width = labels.dim(1);
  const int64_t h = params().GetInt("hidden_dim");
  const int beam = static_cast<int>(params().GetInt("beam_size"));

  std::vector<std::vector<int64_t>> decoded(b);
  if (beam <= 1) {
    // Vectorized greedy rollout; per-row results match a batch-1 rollout
    // because row-wise matmul accumulation order is identical.
    Tensor enc_out = Encode(theta, src.tensor("ids"), src_paddings);
    Tensor m = Tensor::Zeros({b, h}, enc_out.dtype());
    Tensor c = m;
    Tensor prev = Tensor::Full({b}, static_cast<double>(bos_id()), enc_out.dtype());
    Tensor live = Tensor::Zeros({b}, enc_out.dtype());  // decode every row fully
    std::vector<bool> done(b, false);
    for (int64_t t = 0; t < width && !std::all_of(done.begin(), done.end(),
                                                  [](bool d) { return d; });
         ++t) {
      Tensor logits = DecoderStep(theta, prev, enc_out, src_paddings, live, &m, &c);
      std::vector<double> next(b);
      const int64_t v = logits.dim(1);
      for (int64_t row = 0; row < b; ++row) {
        int64_t best = 0;
        for (int64_t k = 1; k < v; ++k) {
          if (logits.data()[row * v + k] > logits.data()[row * v + best]) best = k;
        }
        next[row] = static_cast<double>(best);
        if (!done[row]) {
          decoded[row].push_back(best);
          if (best == eos_id()) done[row] = true;
        }
      }
      prev = Tensor::FromVector({b}, std::move(next), enc_out.dtype());
    }
  } else {
    for (int64_t row = 0; row < b; ++row) {
      std::vector<int64_t> src_ids;
      for (int64_t t = 0; t < src.tensor("ids").dim(1); ++t) {
        if (src_paddings.at({row, t}) != 0.0) break;
        src_ids.push_back(std::llround(src.tensor("ids").at({row, t})));
      }
      std::vector<int64_t> ids =
          DecodeIds(theta, src_ids, beam, static_cast<int>(width));
      ids.push_back(eos_id());  // DecodeIds strips the terminator
      decoded[row] = std::move(ids);
    }
  }

  int64_t matches = 0;
  for (int64_t row = 0; row < b; ++row) {
    int64_t expect_len = 0;
    for (int64_t t = 0; t < width; ++t) expect_len += weights.at({row, t}) != 0.0 ? 1 : 0;
    bool match = static_cast<int64_t>(decoded[row].size()) == expect_len;
    for (int64_t t = 0; match && t < expect_len; ++t) {
      match = decoded[row][t] == std::llround(labels.at({row, t}));
    }
    matches += match ? 1 : 0;
  }
  NestedMap metrics;
  metrics.Set("exact_match",
              MakeMetric(b > 0 ? static_cast<double>(matches) / static_cast<double>(b) : 0.0,
                         static_cast<double>(b)));
  return metrics;
}

std::vector<int64_t> AttentionSeq2Seq::DecodeIds(const NestedMap& theta,
                                                 const std::vector<int64_t>& src_ids,
                                                 int beam_size, int max_len) const {
  const int64_t s_len = static_cast<int64_t>(src_ids.size());
  LARK_CHECK(s_len > 0);
  const int64_t h = params().GetInt("hidden_dim");
  if (max_len <= 0) max_len = static_cast<int>(s_len) + 2;

  std::vector<double> ids_data(src_ids.begin(), src_ids.end());
  Tensor ids = Tensor::FromVector({1, s_len}, std::move(ids_data), dtype());
  Tensor paddings = Tensor::Zeros({1, s_len}, dtype());
  Tensor enc_out = Encode(theta, ids, paddings);

  NestedMap init;
  init.Set("m", Tensor::Zeros({1, h}, dtype()));
  init.Set("c", Tensor::Zeros({1, h}, dtype()));
  Tensor live = Tensor::Zeros({1}, dtype());

  DecodeFn step = [&](const NestedMap& state, int64_t prev_id) {
    Tensor m = state.tensor("m");
    Tensor c = state.tensor("c");
    Tensor prev = Tensor::Full({1}, static_cast<double>(prev_id), dtype());
    Tensor logits = DecoderStep(theta, prev, enc_out, paddings, live, &m, &c);
    DecodeStep out;
    out.logits = logits.data();
    out.state.Set("m", std::move(m));
    out.state.Set("c", std::move(c));
    return out;
  };
  return BeamSearch(step, init, bos_id(), eos_id(), beam_size, max_len);
}

InputGenerator::ProcessRecordFn MakeSeq2SeqProcessor(
    std::shared_ptr<const VocabFileTokenizer> tokenizer, DType dtype) {
  return [tokenizer, dtype](const std::string& record) {
    const size_t tab = record.find('\t');
    if (tab == std::string::npos) {
      Fail(ErrorCode::kParseError, "record is not source<TAB>target");
    }
    const std::vector<int64_t> src =
        tokenizer->Tokenize(record.substr(0, tab), /*add_bos=*/false, /*add_eos=*/true);
    const std::vector<int64_t> tgt_in =
        tokenizer->Tokenize(record.substr(tab + 1), /*add_bos=*/true, /*add_eos=*/false);
    const std::vector<int64_t> tgt_out =
        tokenizer->Tokenize(record.substr(tab + 1), /*add_bos=*/false, /*add_eos=*/true);
    LARK_CHECK(tgt_in.size() == tgt_out.size());

    auto ids_tensor = [&](const std::vector<int64_t>& ids) {
      std::vector<double> data(ids.begin(), ids.end());
      return Tensor::FromVector({static_cast<int64_t>(ids.size())}, std::move(data), dtype);
    };
    const int64_t s_len = static_cast<int64_t>(src.size());
    const int64_t t_len = static_cast<int64_t>(tgt_in.size());

    NestedMap src_map;
    src_map.Set("ids", ids_tensor(src));
    src_map.Set("paddings", Tensor::Zeros({s_len}, dtype));
    NestedMap tgt_map;
    tgt_map.Set("ids", ids_tensor(tgt_in));
    tgt_map.Set("labels", ids_tensor(tgt_out));
    tgt_map.Set("paddings", Tensor::Zeros({t_len}, dtype));
    tgt_map.Set("weights", Tensor::Full({t_len}, 1.0, dtype));

    NestedMap example;
    example.Set("src", std::move(src_map));
    example.Set("tgt", std::move(tgt_map));
    example.Set("length", std::max(s_len, t_len));
    return example;
  };
}

const LayerClass* AttentionSeq2Seq::kClass =
    RegisterLayerClassOf<AttentionSeq2Seq>("AttentionSeq2Seq");

}  // namespace lark
