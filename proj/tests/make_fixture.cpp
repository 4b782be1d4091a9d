// Copyright 2026 The tumorloc Authors. All Rights Reserved.
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

// Writes a small synthetic slide and companion inputs for the CLI smoke test.

#include <fstream>
#include <iostream>

#include "synthetic.hpp"
#include "tumorloc/image.hpp"

namespace syn = tumorloc::testing;

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixture <dir>\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  std::filesystem::create_directories(dir);
  syn::SyntheticSlideSpec spec;
  spec.slide_id = "smoke";
  spec.cols = 6;
  spec.rows = 5;
  spec.tumor_col0 = 1;
  spec.tumor_row0 = 1;
  spec.tumor_cols = 3;
  spec.tumor_rows = 3;
  tumorloc::WritePng(dir / "smoke.png", syn::SyntheticSlideImage(spec));
  std::ofstream(dir / "stub.csv") << syn::StubTableCsv(spec);

  std::ofstream pred(dir / "predictions.csv");
  pred << "slide_id,col,row,p_pos,label,cohort\n";
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      const bool tumor = syn::InTumorBlock(spec, c, r);
      pred << "smoke," << c << ',' << r << ',' << (tumor ? "0.9" : "0.2") << ',' << (tumor ? 1 : 0)
           << ",CRC\n";
    }
  }
  std::ofstream manifest(dir / "manifest.ndjson");
  for (int i = 0; i < 40; ++i) {
    manifest << R"({"slide_id":"s)" << i % 4 << R"(","col":)" << i << R"(,"row":0,"label":)" << i % 2
             << R"(,"tumor_type":"CRC","patient_id":"p)" << i % 4 << "\"}\n";
  }
  return 0;
}
