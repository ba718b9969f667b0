// SPDX-License-Identifier: Apache-2.0

pub mod bench;
pub mod check;
pub mod corpus;
pub mod decode;
pub mod labels;
pub mod tokenize;
pub mod train_ref;

use std::io::Read;
use std::path::Path;

use verispec::tokenizer::Vocab;

use crate::fail::{CmdResult, OrFail};

pub(crate) fn load_vocab(path: &Path) -> CmdResult<Vocab> {
    Vocab::load(path).or_data(format!("loading vocabulary {}", path.display()))
}

pub(crate) fn read_text(path: &Path) -> CmdResult<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).or_data("reading stdin")?;
        return Ok(s);
    }
    std::fs::read_to_string(path).or_data(format!("reading {}", path.display()))
}

pub(crate) fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> CmdResult {
    std::fs::write(path, bytes).or_data(format!("writing {}", path.display()))
}
