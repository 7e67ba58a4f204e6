//! Bundled fixtures: reference evaluation counts and scores, and a small synthetic
//! bilingual corpus whose pronoun labels are known by construction.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{self, Document, GenderLabel, Lang};
use crate::error::{Error, Result};
use crate::extract::PronounKind;
use crate::metrics::{ConfusionMatrix, ProdropRates, RateRow};
use crate::text;

/// English pronoun counts and how many were dropped on the Spanish side.
pub fn prodrop_rate_counts() -> ProdropRates {
    ProdropRates { masc: RateRow::new(1220, 1106), fem: RateRow::new(314, 251) }
}

/// Prodrop human agreement. Rows: pipeline MASC, FEM. Columns: human MASC, FEM, unclear.
pub fn prodrop_agreement() -> ConfusionMatrix {
    ConfusionMatrix::from_rows([221, 3, 36], [7, 179, 43])
}

/// Possessive human agreement, same layout as [`prodrop_agreement`].
pub fn possessive_agreement() -> ConfusionMatrix {
    ConfusionMatrix::from_rows([198, 6, 48], [25, 179, 55])
}

/// One system's reported scores.
#[derive(Clone, Copy, Debug)]
pub struct ScoreRow {
    pub task: &'static str,
    pub system: &'static str,
    /// MASC P, R, F1 then FEM P, R, F1, in percent.
    pub values: [f64; 6],
}

pub fn system_scores() -> Vec<ScoreRow> {
    let row = |task, system, values| ScoreRow { task, system, values };
    vec![
        row("prodrop", "Baseline MT (Sentences)", [56.2, 81.3, 66.5, 91.3, 18.6, 30.9]),
        row("prodrop", "Baseline MT (Contexts)", [62.4, 60.5, 61.4, 93.0, 25.1, 39.5]),
        row("prodrop", "Context MT (Contexts)", [65.1, 65.3, 65.2, 88.9, 35.8, 51.0]),
        row("prodrop", "BERT (Sentences)", [66.6, 61.6, 64.0, 87.0, 40.2, 54.9]),
        row("prodrop", "BERT (Contexts)", [81.6, 58.5, 68.1, 92.6, 58.5, 71.7]),
        row("prodrop", "BERT (Contexts) + Data", [90.4, 95.2, 92.7, 95.0, 89.8, 92.3]),
        row("possessive", "Baseline MT (Sentences)", [58.2, 77.8, 66.6, 86.7, 30.4, 45.0]),
        row("possessive", "Baseline MT (Contexts)", [63.6, 63.4, 63.5, 87.2, 35.0, 50.0]),
        row("possessive", "Context MT (Contexts)", [64.2, 67.6, 65.9, 86.4, 38.0, 52.8]),
        row("possessive", "BERT (Contexts) + Data", [87.4, 91.3, 89.3, 90.9, 86.8, 88.8]),
    ]
}

/// Top mask fills for the dropped subject of the Britney Spears sentence.
pub fn britney_mask_fills() -> Vec<(&'static str, f64)> {
    vec![("spears", 0.61), ("britney", 0.23), ("tambien", 0.06), ("ella", 0.03), ("rapidamente", 0.01)]
}

/// The Britney Spears context: two preceding sentences, then the target.
pub const BRITNEY_ES: [&str; 3] = [
    "Britney Jean Spears (McComb, Misisipi; 2 de diciembre de 1981), conocida como Britney Spears, es una cantante, bailarina, compositora, modelo, actriz, diseñadora de modas y empresaria estadounidense.",
    "Comenzó a actuar desde niña, a través de papeles en producciones teatrales.",
    "Adquirió fama durante su niñez al participar en el programa de televisión The Mickey Mouse Club (1992).",
];

const BRITNEY_EN: [&str; 3] = [
    "Britney Jean Spears (born December 2, 1981 in McComb, Mississippi), known as Britney Spears, is an American singer, dancer, songwriter, model, actress, fashion designer and businesswoman.",
    "She began to act as a child, through roles in theatrical productions.",
    "She gained fame during her childhood by participating in the television program The Mickey Mouse Club (1992).",
];

pub const SHIGA_ES: &str =
    "Publicó numerosas antologías de su poesía durante su vida, incluyendo Fuji no Mi , Asa Tsuki, Asa Ginu, y Kamakura Zakki.";
pub const SHIGA_EN: &str = "She published numerous anthologies of her poetry during her lifetime, including Fuji no Mi (\"Wisteria Beans\"), Asa Tsuki (\"Morning Moon\"), Asa Ginu (\"Linen Silk\"), and Kamakura Zakki (\"Kamakura Miscellany\").";

/// A pronoun the synthetic corpus was built to contain.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Planted {
    pub doc_id: String,
    pub sent_id: u32,
    /// Token index of the verb (prodrop) or of `su` (possessive).
    pub anchor: usize,
    pub kind: PronounKind,
    pub label: GenderLabel,
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub es: Vec<Document>,
    pub en: Vec<Document>,
    /// Word-level `es<TAB>en` translations covering the Spanish side.
    pub dictionary: String,
    pub planted: Vec<Planted>,
}

struct Person {
    first: &'static str,
    gender: GenderLabel,
    city: &'static str,
    other_city: &'static str,
    field: (&'static str, &'static str),
    job: (&'static str, &'static str),
}

const PEOPLE: [(&str, &str, GenderLabel); 18] = [
    ("Ana", "Herrera", GenderLabel::Fem),
    ("Carlos", "Castillo", GenderLabel::Masc),
    ("Carmen", "Navarro", GenderLabel::Fem),
    ("Diego", "Ortega", GenderLabel::Masc),
    ("Elena", "Romero", GenderLabel::Fem),
    ("José", "Vidal", GenderLabel::Masc),
    ("Lucía", "Molina", GenderLabel::Fem),
    ("Juan", "Delgado", GenderLabel::Masc),
    ("María", "Serrano", GenderLabel::Fem),
    ("Luis", "Campos", GenderLabel::Masc),
    ("Sofía", "Fuentes", GenderLabel::Fem),
    ("Manuel", "Reyes", GenderLabel::Masc),
    ("Isabel", "Rojas", GenderLabel::Fem),
    ("Miguel", "Vega", GenderLabel::Masc),
    ("Laura", "Soto", GenderLabel::Fem),
    ("Pablo", "Ibarra", GenderLabel::Masc),
    ("Andrés", "Paredes", GenderLabel::Masc),
    ("Pedro", "Cabrera", GenderLabel::Masc),
];

const CITIES: [&str; 7] = ["Lima", "Quito", "Sevilla", "Bogotá", "Valencia", "Córdoba", "Montevideo"];

const FIELDS: [(&str, &str); 6] = [
    ("física", "physics"),
    ("química", "chemistry"),
    ("medicina", "medicine"),
    ("historia", "history"),
    ("arquitectura", "architecture"),
    ("filosofía", "philosophy"),
];

const JOBS: [(&str, &str); 3] = [("periodista", "journalist"), ("editor", "editor"), ("guía", "guide")];

const DICTIONARY: &[(&str, &str)] = &[
    ("a", "to"),
    ("actuar", "act"),
    ("adquirió", "gained"),
    ("al", "by"),
    ("antologías", "anthologies"),
    ("años", "years"),
    ("comenzó", "began"),
    ("como", "as"),
    ("de", "of"),
    ("dedicó", "dedicated"),
    ("desde", "as a"),
    ("durante", "during"),
    ("el", "the"),
    ("en", "in"),
    ("estudió", "studied"),
    ("fama", "fame"),
    ("ganó", "won"),
    ("incluyendo", "including"),
    ("la", "the"),
    ("libro", "book"),
    ("muchos", "many"),
    ("murió", "died"),
    ("nació", "was born"),
    ("niña", "child"),
    ("niñez", "childhood"),
    ("numerosas", "numerous"),
    ("obra", "work"),
    ("papeles", "roles"),
    ("participar", "participating"),
    ("poesía", "poetry"),
    ("por", "for"),
    ("premio", "award"),
    ("presentó", "presented"),
    ("primer", "first"),
    ("producciones", "productions"),
    ("programa", "program"),
    ("publicó", "published"),
    ("su", "her"),
    ("teatrales", "theatrical"),
    ("televisión", "television"),
    ("tokio", "Tokyo"),
    ("trabajo", "work"),
    ("trabajó", "worked"),
    ("través", "through"),
    ("un", "a"),
    ("universidad", "university"),
    ("viajó", "traveled"),
    ("vida", "lifetime"),
    ("y", "and"),
];

/// Planted sentence shapes. Prodrop ones start with the verb.
#[derive(Clone, Copy)]
enum Template {
    Studied,
    Worked,
    Dedicated,
    FirstBook,
    Presented,
    Award,
}

impl Template {
    fn is_prodrop(self) -> bool {
        !matches!(self, Template::Dedicated | Template::Presented)
    }

    fn render(self, p: &Person, year: u32) -> (String, String) {
        let (he, his) = match p.gender {
            GenderLabel::Fem => ("She", "her"),
            GenderLabel::Masc => ("He", "his"),
        };
        let f = p.first;
        match self {
            Template::Studied => (
                format!("Estudió {} en la universidad de {}.", p.field.0, p.city),
                format!("{he} studied {} at the university of {}.", p.field.1, p.city),
            ),
            Template::Worked => (
                format!("Trabajó como {} durante muchos años.", p.job.0),
                format!("{he} worked as a {} for many years.", p.job.1),
            ),
            Template::Dedicated => (
                format!("{f} dedicó su vida a la {}.", p.field.0),
                format!("{f} dedicated {his} life to {}.", p.field.1),
            ),
            Template::FirstBook => {
                (format!("Publicó su primer libro en {year}."), format!("{he} published {his} first book in {year}."))
            }
            Template::Presented => (
                format!("{f} presentó su obra en {}.", p.other_city),
                format!("{f} presented {his} work in {}.", p.other_city),
            ),
            Template::Award => (
                format!("Ganó un premio por su trabajo en {year}."),
                format!("{he} won an award for {his} work in {year}."),
            ),
        }
    }
}

/// Planted templates per article; each group holds exactly three pronouns.
const GROUPS: [&[Template]; 5] = [
    &[Template::Studied, Template::FirstBook],
    &[Template::Worked, Template::Award],
    &[Template::Studied, Template::Dedicated, Template::Worked],
    &[Template::FirstBook, Template::Presented],
    &[Template::Award, Template::Dedicated],
];

/// Records the prodrop verb (when `prodrop`) and every `su` in one sentence.
fn plant(doc_id: &str, sent_id: u32, es: &str, prodrop: bool, gender: GenderLabel, out: &mut Vec<Planted>) {
    let mut push =
        |anchor, kind| out.push(Planted { doc_id: doc_id.to_string(), sent_id, anchor, kind, label: gender });
    if prodrop {
        push(0, PronounKind::Prodrop);
    }
    for (i, t) in text::tokenize(es).iter().enumerate() {
        if t.surface == "su" {
            push(i, PronounKind::Possessive);
        }
    }
}

fn slug(s: &str) -> String {
    text::strip_diacritics(s).to_lowercase()
}

/// Builds the 20-article corpus. Deterministic, no randomness involved.
pub fn synthetic_corpus() -> SyntheticCorpus {
    let mut es_docs = Vec::new();
    let mut en_docs = Vec::new();
    let mut planted = Vec::new();

    // `planted_at` lists (sentence index, starts with a dropped subject).
    let mut add = |slug: &str, title: &str, pairs: Vec<(String, String)>, gender, planted_at: &[(usize, bool)]| {
        let es_id = format!("es:{slug}");
        for &(i, prodrop) in planted_at {
            plant(&es_id, i as u32, &pairs[i].0, prodrop, gender, &mut planted);
        }
        let (es, en): (Vec<String>, Vec<String>) = pairs.into_iter().unzip();
        es_docs.push(Document::from_texts(&es_id, Lang::Es, title, &es));
        en_docs.push(Document::from_texts(&format!("en:{slug}"), Lang::En, title, &en));
    };

    add(
        "shiga",
        "Mitsuko Shiga",
        vec![
            ("Mitsuko Shiga nació en Tokio en 1885.".into(), "Mitsuko Shiga was born in Tokyo in 1885.".into()),
            (SHIGA_ES.into(), SHIGA_EN.into()),
            ("Mitsuko murió en Tokio en 1946.".into(), "Mitsuko died in Tokyo in 1946.".into()),
        ],
        GenderLabel::Fem,
        &[(1, true)],
    );
    add(
        "spears",
        "Britney Spears",
        BRITNEY_ES.iter().zip(BRITNEY_EN).map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        GenderLabel::Fem,
        &[(1, true), (2, true)],
    );

    for (i, &(first, last, gender)) in PEOPLE.iter().enumerate() {
        let p = Person {
            first,
            gender,
            city: CITIES[i % CITIES.len()],
            other_city: CITIES[(i + 3) % CITIES.len()],
            field: FIELDS[i % FIELDS.len()],
            job: JOBS[i % JOBS.len()],
        };
        let born = 1900 + 3 * i as u32;
        let mut pairs = vec![(
            format!("{first} {last} nació en {} en {born}.", p.city),
            format!("{first} {last} was born in {} in {born}.", p.city),
        )];
        let mut at = Vec::new();
        let group = GROUPS[i % GROUPS.len()];
        for (k, t) in group.iter().enumerate() {
            at.push((pairs.len(), t.is_prodrop()));
            pairs.push(t.render(&p, born + 25 + 5 * k as u32));
            if k == 0 {
                pairs.push((
                    format!("{first} viajó a {} en {}.", p.other_city, born + 22),
                    format!("{first} traveled to {} in {}.", p.other_city, born + 22),
                ));
            }
        }
        pairs.push((
            format!("{first} murió en {} en {}.", p.city, born + 70),
            format!("{first} died in {} in {}.", p.city, born + 70),
        ));
        add(&slug(last), &format!("{first} {last}"), pairs, gender, &at);
    }

    let mut dictionary = String::new();
    for (es, en) in DICTIONARY {
        let _ = writeln!(dictionary, "{es}\t{en}");
    }
    for (es, en) in FIELDS.iter().chain(&JOBS) {
        if es != en {
            let _ = writeln!(dictionary, "{es}\t{en}");
        }
    }
    planted.sort();
    SyntheticCorpus { es: es_docs, en: en_docs, dictionary, planted }
}

pub const SYNTHETIC_FILES: [&str; 4] = ["es.txt", "en.txt", "dictionary.tsv", "planted.jsonl"];

pub fn write_planted<W: Write>(planted: &[Planted], mut w: W) -> Result<()> {
    for p in planted {
        serde_json::to_writer(&mut w, p)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_planted<R: BufRead>(r: R) -> Result<Vec<Planted>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Record { record: i + 1, msg: e.to_string() })?);
    }
    Ok(out)
}

impl SyntheticCorpus {
    /// Writes the four files named in [`SYNTHETIC_FILES`] into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut buf = Vec::new();
        corpus::write_plain(&self.es, &mut buf)?;
        std::fs::write(dir.join("es.txt"), &buf)?;
        buf.clear();
        corpus::write_plain(&self.en, &mut buf)?;
        std::fs::write(dir.join("en.txt"), &buf)?;
        std::fs::write(dir.join("dictionary.tsv"), &self.dictionary)?;
        buf.clear();
        write_planted(&self.planted, &mut buf)?;
        std::fs::write(dir.join("planted.jsonl"), &buf)?;
        Ok(())
    }
}

/// Directory holding the checked-in copy of the synthetic corpus.
pub fn bundled_synthetic_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join("synthetic")
}
