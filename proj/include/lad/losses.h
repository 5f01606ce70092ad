// Copyright 2026 The LAD Authors. All Rights Reserved.
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

// Scalar losses over logits maps, each with an optional analytic gradient.
// Gradients are written (not accumulated) into the output pointers.

#ifndef LAD_LOSSES_H_
#define LAD_LOSSES_H_

#include "lad/tensor.h"

namespace lad {

struct LossWeights {
  double lambda_consistency = 1.0;
  double beta_kd = 3.0;
  double temperature = 4.0;
};

// How the teacher's two noised paths are compared.
enum class ConsistencyForm {
  // 0.5 * (cwd(o1 -> o2) + cwd(o2 -> o1)), differentiated through both
  // arguments of both terms.
  kSymmetric,
  // cwd(o1 -> o2) with o1 held constant.
  kOneDirectional,
};

// Mean over non-IGNORE pixels of -log softmax_c(logits)[label]. Zero when
// every pixel is IGNORE.
double CrossEntropySeg(const LogitsMap& logits, const LabelMap& label,
                       LogitsMap* grad = nullptr);

// Channel-wise distillation: per class channel, a temperature-softened
// softmax over all H*W positions for teacher (p) and student (q), then
// (tau^2 / C) * sum_c KL(p_c || q_c). The teacher is a constant; only the
// student gradient is available.
double CwdLoss(const LogitsMap& teacher, const LogitsMap& student,
               double temperature, LogitsMap* student_grad = nullptr);

// Consistency distance D(o1, o2) between the two teacher paths.
double ConsistencyDistance(const LogitsMap& o1, const LogitsMap& o2,
                           double temperature, ConsistencyForm form,
                           LogitsMap* grad_o1 = nullptr,
                           LogitsMap* grad_o2 = nullptr);

struct TeacherLossBreakdown {
  double ce_first = 0.0;
  double ce_second = 0.0;
  double consistency = 0.0;           // D(o1, o2), unweighted
  double weighted_consistency = 0.0;  // lambda * D
  double total = 0.0;
};

// CE(o1, Y) + CE(o2, Y) + lambda * D(o1, o2).
TeacherLossBreakdown TeacherLoss(
    const LogitsMap& o1, const LogitsMap& o2, const LabelMap& label,
    const LossWeights& weights,
    ConsistencyForm form = ConsistencyForm::kSymmetric,
    LogitsMap* grad_o1 = nullptr, LogitsMap* grad_o2 = nullptr);

struct StudentLossBreakdown {
  double ce = 0.0;
  double kd = 0.0;           // cwd(teacher, student), unweighted
  double weighted_kd = 0.0;  // beta * kd
  double total = 0.0;
};

// CE(student, Y) + beta * cwd(teacher, student). Teacher logits are constant.
StudentLossBreakdown StudentLoss(const LogitsMap& student,
                                 const LogitsMap& teacher,
                                 const LabelMap& label,
                                 const LossWeights& weights,
                                 LogitsMap* student_grad = nullptr);

}  // namespace lad

#endif  // LAD_LOSSES_H_
