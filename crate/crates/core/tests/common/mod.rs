#![allow(dead_code)]

use std::path::PathBuf;

use speccheck::syntax::{compile, Program};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus_path(name: &str) -> String {
    corpus_dir().join(name).display().to_string()
}

pub fn corpus(name: &str) -> Program {
    let text = std::fs::read_to_string(corpus_dir().join(name)).unwrap();
    compile(&text, name).unwrap_or_else(|d| panic!("{}", d.rendered))
}

/// Every `.wys` file in the corpus, sorted by name.
pub fn corpus_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".wys"))
        .collect();
    names.sort();
    names
}
