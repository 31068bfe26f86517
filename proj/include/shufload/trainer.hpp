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
// Linear least-squares SGD consumer. Batch gradients are reduced after
// sorting contributions by global index, so the update is a function of the
// batch's (index, sample) multiset and never of arrival order.
#ifndef SHUFLOAD_TRAINER_HPP_
#define SHUFLOAD_TRAINER_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "shufload/fetch.hpp"
#include "shufload/format.hpp"
#include "shufload/sampler.hpp"

namespace shufload::trainer {

struct ModelState {
  std::vector<double> theta;
  double eta = 0.01;
};

struct SyntheticSample {
  std::vector<double> x;
  double y = 0.0;

  bool operator==(const SyntheticSample&) const = default;
};

// (dim + 1) little-endian binary64 values: x[0..dim), then y.
format::Bytes EncodeSample(const SyntheticSample& sample);
SyntheticSample DecodeSample(format::ByteView payload, size_t dim);
inline uint32_t SamplePayloadBytes(size_t dim) {
  return static_cast<uint32_t>((dim + 1) * sizeof(double));
}

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// l = (theta . x - y)^2, grad = 2 (theta . x - y) x.
LossGrad PerSampleLossGrad(std::span<const double> theta,
                           const SyntheticSample& sample);

struct IndexedLossGrad {
  uint64_t global_index = 0;
  LossGrad value;
};

struct BatchGradient {
  std::vector<double> mean_grad;
  double mean_loss = 0.0;

  bool operator==(const BatchGradient&) const = default;
};

// Sorts by global_index, sums left to right in binary64, divides by N.
BatchGradient BatchReduce(std::vector<IndexedLossGrad> contributions);

ModelState SgdStep(const ModelState& state, const BatchGradient& gradient);

struct TrainOptions {
  sampler::ShuffleSpec shuffle;  // `epoch` is overwritten per epoch
  uint64_t batch_size = 32;
  bool drop_last = false;
  uint64_t epochs = 1;
  fetch::LoaderOptions loader;
};

struct TrainResult {
  ModelState state;
  std::vector<double> loss_trace;  // mean batch loss at theta before each step
};

TrainResult TrainEpochs(std::shared_ptr<const format::DatasetHandle> handle,
                        const ModelState& initial,
                        const TrainOptions& options);

// Lag-1 sample autocorrelation of a series (0 for fewer than 3 points or a
// constant series).
double Lag1Autocorrelation(std::span<const double> series);

}  // namespace shufload::trainer

#endif  // SHUFLOAD_TRAINER_HPP_
