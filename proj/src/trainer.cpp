/* Copyright 2026 The shufload Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "shufload/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "byte_io.hpp"
#include "shufload/error.hpp"

namespace shufload::trainer {

format::Bytes EncodeSample(const SyntheticSample& sample) {
  format::Bytes out;
  out.reserve(SamplePayloadBytes(sample.x.size()));
  for (const double v : sample.x) internal::PutF64(out, v);
  internal::PutF64(out, sample.y);
  return out;
}

SyntheticSample DecodeSample(format::ByteView payload, size_t dim) {
  if (payload.size() != SamplePayloadBytes(dim)) {
    throw Error(ErrorCode::kFormat,
                "payload of " + std::to_string(payload.size()) +
                    " bytes is not a dim-" + std::to_string(dim) + " sample");
  }
  SyntheticSample s;
  s.x.resize(dim);
  for (size_t k = 0; k < dim; ++k) {
    s.x[k] = internal::LoadF64(payload.data() + 8 * k);
  }
  s.y = internal::LoadF64(payload.data() + 8 * dim);
  return s;
}

LossGrad PerSampleLossGrad(std::span<const double> theta,
                           const SyntheticSample& sample) {
  if (theta.size() != sample.x.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "theta has dim " + std::to_string(theta.size()) +
                    ", sample has dim " + std::to_string(sample.x.size()));
  }
  double prediction = 0.0;
  for (size_t k = 0; k < theta.size(); ++k) prediction += theta[k] * sample.x[k];
  const double residual = prediction - sample.y;
  LossGrad out;
  out.loss = residual * residual;
  out.grad.resize(theta.size());
  for (size_t k = 0; k < theta.size(); ++k) {
    out.grad[k] = 2.0 * residual * sample.x[k];
  }
  return out;
}

BatchGradient BatchReduce(std::vector<IndexedLossGrad> contributions) {
  if (contributions.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot reduce an empty batch");
  }
  std::sort(contributions.begin(), contributions.end(),
            [](const IndexedLossGrad& a, const IndexedLossGrad& b) {
              return a.global_index < b.global_index;
            });
  const size_t dim = contributions.front().value.grad.size();
  BatchGradient out;
  out.mean_grad.assign(dim, 0.0);
  for (const IndexedLossGrad& c : contributions) {
    if (c.value.grad.size() != dim) {
      throw Error(ErrorCode::kInvalidArgument, "gradient dims differ in batch");
    }
    out.mean_loss += c.value.loss;
    for (size_t k = 0; k < dim; ++k) out.mean_grad[k] += c.value.grad[k];
  }
  const double n = static_cast<double>(contributions.size());
  out.mean_loss /= n;
  for (double& g : out.mean_grad) g /= n;
  return out;
}

ModelState SgdStep(const ModelState& state, const BatchGradient& gradient) {
  if (gradient.mean_grad.size() != state.theta.size()) {
    throw Error(ErrorCode::kInvalidArgument, "gradient/theta dim mismatch");
  }
  if (!std::isfinite(state.eta) ||
      !std::all_of(state.theta.begin(), state.theta.end(),
                   [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::kNumeric, "non-finite model state");
  }
  if (!std::all_of(gradient.mean_grad.begin(), gradient.mean_grad.end(),
                   [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::kNumeric, "non-finite gradient");
  }
  ModelState next = state;
  for (size_t k = 0; k < next.theta.size(); ++k) {
    next.theta[k] = state.theta[k] - state.eta * gradient.mean_grad[k];
  }
  return next;
}

TrainResult TrainEpochs(std::shared_ptr<const format::DatasetHandle> handle,
                        const ModelState& initial,
                        const TrainOptions& options) {
  if (!handle) throw Error(ErrorCode::kInvalidArgument, "null dataset handle");
  if (!(initial.eta > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate must be > 0");
  }
  TrainResult result{initial, {}};
  const size_t dim = initial.theta.size();
  for (uint64_t epoch = 0; epoch < options.epochs; ++epoch) {
    sampler::ShuffleSpec spec = options.shuffle;
    spec.epoch = epoch;
    sampler::EpochPlan plan =
        sampler::MakeEpochPlan(spec, handle->num_samples(), options.batch_size,
                               options.drop_last);
    fetch::EpochLoader loader(handle, plan.Batches(), options.loader);
    while (auto batch = loader.Next()) {
      std::vector<IndexedLossGrad> contributions;
      contributions.reserve(batch->samples.size());
      for (const fetch::FetchedSample& s : batch->samples) {
        SyntheticSample sample;
        try {
          sample = DecodeSample(s.payload, dim);
        } catch (const Error& e) {
          throw Error(ErrorCode::kFormat,
                      "training aborted at batch " +
                          std::to_string(batch->batch_ordinal) + ": " +
                          e.what());
        }
        contributions.push_back(
            {s.global_index, PerSampleLossGrad(result.state.theta, sample)});
      }
      const BatchGradient g = BatchReduce(std::move(contributions));
      result.loss_trace.push_back(g.mean_loss);
      result.state = SgdStep(result.state, g);
    }
  }
  return result;
}

double Lag1Autocorrelation(std::span<const double> series) {
  const size_t n = series.size();
  if (n < 3) return 0.0;
  double mean = 0.0;
  for (const double v : series) mean += v;
  mean /= static_cast<double>(n);
  double denom = 0.0;
  double numer = 0.0;
  for (size_t t = 0; t < n; ++t) {
    const double d = series[t] - mean;
    denom += d * d;
    if (t + 1 < n) numer += d * (series[t + 1] - mean);
  }
  return denom == 0.0 ? 0.0 : numer / denom;
}

}  // namespace shufload::trainer
