// Copyright 2026 The gckit Authors.
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

// Generates a planted instance, clusters it, and prints the scores.

#include <iostream>

#include "gckit/gckit.hpp"

int main() {
  gckit::SynthOptions opts;
  opts.k_true = 4;
  opts.n_docs = 120;
  opts.m = 80;
  opts.j = 512;
  gckit::Rng rng(2024);
  const auto inst = gckit::generate_instance(opts, rng);

  gckit::Params params;
  params.k = 4;
  params.seed = 1;
  const auto run = gckit::cluster_best_of(inst.p.log_p, params);

  const auto scores = gckit::evaluate(inst.true_labels, run.assignment.labels);
  std::cout << "total distortion " << run.assignment.total_distortion << " after "
            << run.assignment.iterations << " iterations\n"
            << "ACC " << scores.acc << "  NMI " << scores.nmi << "  ARI " << scores.ari << "\n";
}
