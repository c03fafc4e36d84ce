//! Writes a synthetic "human" and "bot" corpus as directories of .txt files.
//!
//! cargo run -p sempath-core --example synth_corpus -- <out_dir> [docs] [tokens] [seed]

use std::fs;
use std::path::PathBuf;

use sempath::synth::{bot_corpus, human_corpus, BotStyle, TextShape};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().ok_or("usage: synth_corpus <out_dir> [docs] [tokens] [seed]")?);
    let documents = args.next().map_or(Ok(200), |s| s.parse())?;
    let tokens_per_doc = args.next().map_or(Ok(2000), |s| s.parse())?;
    let seed: u64 = args.next().map_or(Ok(1), |s| s.parse())?;
    let shape = TextShape {
        documents,
        tokens_per_doc,
        ..TextShape::default()
    };
    let corpora = [
        ("human", human_corpus(shape, seed)?),
        ("bot", bot_corpus(shape, BotStyle::default(), seed + 100)?),
    ];
    for (name, corpus) in corpora {
        let dir = out.join(name);
        fs::create_dir_all(&dir)?;
        for doc in corpus.documents() {
            let mut text = String::new();
            for line in doc.tokens.chunks(20) {
                text.push_str(&line.join(" "));
                text.push('\n');
            }
            fs::write(dir.join(format!("{}.txt", doc.id)), text)?;
        }
        println!("{}: {} documents", dir.display(), corpus.len());
    }
    Ok(())
}
