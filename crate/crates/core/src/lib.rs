//   Copyright 2026 hzreach developers
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.

pub mod bounds;
pub mod dataset;
pub mod error;
pub mod hz;
pub mod interval;
pub mod linopt;
pub mod lowering;
pub mod model;
pub mod reach;
pub mod reduce;
pub mod robust;
pub mod sparse;

pub use error::{Error, Result};
pub use hz::HybridZonotope;
pub use interval::IntervalVector;
pub use model::{Activation, Dense, Layer, Network, Tensor3};
