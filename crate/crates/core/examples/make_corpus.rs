//! Writes a small synthetic utterance corpus that the `gazesep` CLI can build
//! into a mixture dataset. Usage: `cargo run --example make_corpus -- <dir>`.

use std::env;
use std::fs;
use std::path::PathBuf;

use gazesep::SAMPLE_RATE;
use gazesep::synth::pseudo_speech;
use gazesep::write_wav;

fn main() {
    let dir = PathBuf::from(env::args().nth(1).unwrap_or_else(|| "demo".into()));
    fs::create_dir_all(&dir).expect("create corpus dir");

    let mut csv = String::from("id,speaker_id,audio_path,duration\n");
    for speaker in 1..=2u64 {
        for clip in 0..4u64 {
            let len = SAMPLE_RATE as usize + 3200 * clip as usize + 640 * speaker as usize;
            let wave = pseudo_speech(len, 1000 * speaker + clip);
            let id = format!("spk{speaker}_{clip:02}");
            let path = dir.join(format!("{id}.wav"));
            write_wav(&path, &wave).expect("write clip");
            let duration = len as f64 / SAMPLE_RATE as f64;
            csv.push_str(&format!("{id},spk{speaker},{},{duration}\n", path.display()));
        }
    }

    let csv_path = dir.join("utterances.csv");
    fs::write(&csv_path, csv).expect("write csv");
    println!("{}", csv_path.display());
}
