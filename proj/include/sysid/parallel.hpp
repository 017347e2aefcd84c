// Copyright 2026 The sysid Authors
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

#ifndef SYSID_PARALLEL_HPP_
#define SYSID_PARALLEL_HPP_

#include <functional>

namespace sysid {

// Worker count: SYSID_THREADS if set and positive, else the hardware count.
int worker_count();

// Runs fn(i) for i in [0, n). Each index is handled exactly once; callers
// write results into slot i so the outcome is schedule independent. The
// first exception thrown by any item is rethrown after all workers stop.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace sysid

#endif  // SYSID_PARALLEL_HPP_
