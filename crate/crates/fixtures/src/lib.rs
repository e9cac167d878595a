//! Synthetic oncology report corpus with expert highlights for twelve
//! entities. Every category match is placed on purpose, so the expected
//! TP/FP counts are known by construction and recorded in
//! [`Fixture::expected`].
//!
//! Sentences are written in a small markup: `{...}` is a highlight of the
//! sentence's entity (or entities), `[...]` is an occurrence the expert
//! missed and that a reviewer is expected to convert. Everything else is
//! plain text. Text is lowercase NFC, so raw and normalized offsets agree.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rulefit_core::analytics::SigmoidParams;
use rulefit_core::corpus::{
    normalize, token_strings, write_highlights, Corpus, HighlightSpan, HighlightStore, Origin,
};
use rulefit_core::matcher::{CategoryDef, EntityCategories, MatchRecord};
use rulefit_core::session::{ProjectSession, Workbench};

pub mod entity {
    pub const HISTOLOGY: &str = "histologie_tumorale";
    pub const TREATMENT: &str = "traitement_specifique_du_cancer";
    pub const PHYSICAL_SIGNS: &str = "signes_physiques";
    pub const PROGRESSION: &str = "evolutivite_en_lien_avec_le_cancer";
    pub const CHEMO_RESPONSE: &str = "reponse_a_la_chimiotherapie";
    pub const METASTATIC: &str = "stade_metastatique_avec_localisations";
    pub const SMOKING: &str = "statut_tabagique";
    pub const HISTORY: &str = "atcd_geriatriques_et_medicaux_significatifs_pour_la_prise_en_charge";
    pub const PERFORMANCE: &str = "stade_oms_ecog_karnofsky";
    pub const BIOMARKERS: &str = "biomarqueurs_therapeutiques";
    pub const TOPOGRAPHY: &str = "topographie_du_primitif";
    pub const SYMPTOMS: &str = "symptomes";

    pub const ALL: [&str; 12] = [
        HISTOLOGY,
        TREATMENT,
        PHYSICAL_SIGNS,
        PROGRESSION,
        CHEMO_RESPONSE,
        METASTATIC,
        SMOKING,
        HISTORY,
        PERFORMANCE,
        BIOMARKERS,
        TOPOGRAPHY,
        SYMPTOMS,
    ];
}

/// Transformed homogeneity each entity's expert pool is padded towards.
pub const HOMOGENEITY_TARGETS: [(&str, f64); 12] = [
    (entity::HISTOLOGY, 0.79),
    (entity::TREATMENT, 0.79),
    (entity::PHYSICAL_SIGNS, 0.29),
    (entity::PROGRESSION, 0.01),
    (entity::CHEMO_RESPONSE, 0.82),
    (entity::METASTATIC, 0.60),
    (entity::SMOKING, 0.62),
    (entity::HISTORY, 0.11),
    (entity::PERFORMANCE, 0.91),
    (entity::BIOMARKERS, 0.67),
    (entity::TOPOGRAPHY, 0.57),
    (entity::SYMPTOMS, 0.40),
];

pub const DOC_COUNT: usize = 35;

/// Category ids of the metastatic-stage entity, in creation order.
pub const METASTATIC_CATEGORIES: [&str; 6] = [
    "metastase",
    "stade_iv",
    "m0_m1",
    "implants",
    "carcinose",
    "tnm",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedCounts {
    pub entity: String,
    pub category_id: String,
    /// Matches overlapping an expert highlight.
    pub tp: usize,
    /// Matches overlapping no highlight, missed ones included.
    pub fp: usize,
    /// The part of `fp` the expert missed.
    pub missed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissedSpan {
    pub doc_id: String,
    pub entity: String,
    pub category_id: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone)]
pub struct FixturePaths {
    pub corpus_dir: PathBuf,
    pub highlights: PathBuf,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub corpus: Corpus,
    pub expert: HighlightStore,
    pub categories: Vec<EntityCategories>,
    pub missed: Vec<MissedSpan>,
    pub expected: Vec<ExpectedCounts>,
}

#[derive(Debug, Clone)]
enum Mark {
    Plain,
    Highlight(Vec<&'static str>),
    Missed(&'static str, &'static str),
}

#[derive(Debug, Clone)]
struct Piece {
    text: String,
    mark: Mark,
}

type Segment = Vec<Piece>;

fn parse(
    markup: &str,
    tags: &[&'static str],
    missed: Option<(&'static str, &'static str)>,
) -> Segment {
    let mut out = Vec::new();
    let mut buf = String::new();
    let mut open: Option<char> = None;
    for c in markup.chars() {
        match (c, open) {
            ('{' | '[', None) => {
                if !buf.is_empty() {
                    out.push(Piece {
                        text: std::mem::take(&mut buf),
                        mark: Mark::Plain,
                    });
                }
                open = Some(c);
            }
            ('}', Some('{')) | (']', Some('[')) => {
                let mark = if c == '}' {
                    Mark::Highlight(tags.to_vec())
                } else {
                    let (e, cat) = missed.expect("missed marker outside a missed sentence");
                    Mark::Missed(e, cat)
                };
                out.push(Piece {
                    text: std::mem::take(&mut buf),
                    mark,
                });
                open = None;
            }
            _ => buf.push(c),
        }
    }
    assert!(open.is_none(), "unbalanced markup: {markup}");
    if !buf.is_empty() {
        out.push(Piece {
            text: buf,
            mark: Mark::Plain,
        });
    }
    out
}

#[derive(Default)]
struct Builder {
    segments: Vec<Segment>,
    expected: BTreeMap<(&'static str, &'static str), (usize, usize, usize)>,
    categories: BTreeMap<&'static str, Vec<CategoryDef>>,
}

impl Builder {
    fn category(&mut self, entity: &'static str, id: &'static str, terms: &[&str]) {
        self.categories
            .entry(entity)
            .or_default()
            .push(CategoryDef::with_terms(id, terms));
        self.expected.entry((entity, id)).or_default();
    }

    fn cycle<'a>(variants: &'a [&'a str], n: usize) -> impl Iterator<Item = String> + 'a {
        variants.iter().cycle().take(n).map(|v| (*v).to_owned())
    }

    /// `n` highlighted sentences each holding one term of `cat`.
    fn tp(&mut self, entity: &'static str, cat: &'static str, variants: &[&str], n: usize) {
        for v in Self::cycle(variants, n) {
            self.segments.push(parse(&v, &[entity], None));
        }
        self.expected
            .get_mut(&(entity, cat))
            .expect("category declared")
            .0 += n;
    }

    /// `n` plain sentences each holding one term of `cat`.
    fn fp(&mut self, entity: &'static str, cat: &'static str, variants: &[&str], n: usize) {
        for v in Self::cycle(variants, n) {
            self.segments.push(parse(&v, &[], None));
        }
        self.expected
            .get_mut(&(entity, cat))
            .expect("category declared")
            .1 += n;
    }

    /// `n` sentences where the bracketed term is a mention the expert missed.
    fn missed(&mut self, entity: &'static str, cat: &'static str, variants: &[&str], n: usize) {
        for v in Self::cycle(variants, n) {
            self.segments.push(parse(&v, &[], Some((entity, cat))));
        }
        let slot = self
            .expected
            .get_mut(&(entity, cat))
            .expect("category declared");
        slot.1 += n;
        slot.2 += n;
    }

    /// `n` highlighted sentences no category catches.
    fn uncaught(&mut self, entity: &'static str, variants: &[&str], n: usize) {
        for v in Self::cycle(variants, n) {
            self.segments.push(parse(&v, &[entity], None));
        }
    }

    fn shared(&mut self, credits: &[(&'static str, &'static str)], markup: &str) {
        let tags: Vec<&'static str> = credits.iter().map(|(e, _)| *e).collect();
        self.segments.push(parse(markup, &tags, None));
        for key in credits {
            self.expected.get_mut(key).expect("category declared").0 += 1;
        }
    }

    fn plain(&mut self, text: &str) {
        self.segments.push(parse(text, &[], None));
    }
}

fn metastatic(b: &mut Builder) {
    let e = entity::METASTATIC;
    b.category(e, "metastase", &["métastase", "métastatique"]);
    b.category(e, "stade_iv", &["stade iv", "stade 4", "stade IV"]);
    b.category(e, "m0_m1", &["m0", "m1"]);
    b.category(
        e,
        "implants",
        &["implants péritonéaux", "implant péritonéal"],
    );
    b.category(e, "carcinose", &["carcinose"]);
    b.category(e, "tnm", &["t.n.m.", "pt.n.m.", "ct.n.m.", "pt..n.m."]);

    b.tp(
        e,
        "metastase",
        &[
            "le scanner retrouve des {métastases hépatiques multiples}.",
            "{métastase osseuse lombaire} confirmée.",
            "il s'agit d'une {maladie métastatique pulmonaire}.",
            "irm : {métastases cérébrales}.",
            "{localisation métastatique surrénalienne} droite.",
        ],
        22,
    );
    b.fp(
        e,
        "metastase",
        &[
            "pas de métastase visible ce jour.",
            "bilan à la recherche de métastase négatif.",
            "absence de lésion métastatique.",
        ],
        7,
    );
    b.missed(
        e,
        "metastase",
        &[
            "découverte fortuite de [métastase]s ganglionnaires.",
            "nodule d'allure [métastatique] du foie non signalé.",
        ],
        4,
    );

    b.tp(
        e,
        "stade_iv",
        &[
            "{maladie de stade iv} d'emblée.",
            "{stade 4 avec atteinte hépatique}.",
            "{stade iv pulmonaire}.",
        ],
        9,
    );
    b.fp(
        e,
        "stade_iv",
        &[
            "insuffisance cardiaque stade iv connue.",
            "maladie rénale chronique stade 4.",
        ],
        2,
    );

    b.tp(
        e,
        "m0_m1",
        &[
            "bilan d'extension : {stade m1 hépatique}.",
            "{m1 osseux} au tep.",
        ],
        3,
    );
    b.missed(
        e,
        "m0_m1",
        &["le compte rendu conclut [m1] sans autre précision."],
        1,
    );

    b.tp(
        e,
        "implants",
        &[
            "{implants péritonéaux} visibles.",
            "{implant péritonéal unique} en cœlioscopie.",
        ],
        3,
    );

    b.tp(e, "carcinose", &["{carcinose péritonéale diffuse}."], 1);
    b.fp(e, "carcinose", &["pas de carcinose en cœlioscopie."], 3);
    b.missed(
        e,
        "carcinose",
        &[
            "aspect de [carcinose] sur le scanner.",
            "[carcinose] confirmée en cœlioscopie.",
        ],
        5,
    );

    b.tp(
        e,
        "tnm",
        &[
            "classification {pt.n.m. avec atteinte à distance}.",
            "{ct.n.m. : extension à distance}.",
            "{t.n.m. : localisation à distance}.",
            "{pt..n.m. à distance}.",
        ],
        7,
    );
    b.fp(e, "tnm", &["classification t.n.m. non précisée."], 2);
    b.missed(
        e,
        "tnm",
        &["[ct.n.m.] : extension ganglionnaire et osseuse."],
        2,
    );

    b.uncaught(
        e,
        &[
            "on retrouve des {lésions secondaires hépatiques}.",
            "{localisations osseuses secondaires} multiples.",
            "{nodules pulmonaires suspects de localisation secondaire}.",
            "{atteinte ganglionnaire à distance}.",
            "{lésion surrénalienne secondaire}.",
            "{localisation cérébrale secondaire} unique.",
        ],
        38,
    );
}

fn smoking(b: &mut Builder) {
    let e = entity::SMOKING;
    b.category(e, "tabac", &["tabagisme", "tabac"]);
    b.category(e, "fumeur", &["fumeur", "fumeuse"]);
    b.category(e, "paquets", &["paquets-année"]);
    b.tp(
        e,
        "tabac",
        &[
            "{tabagisme actif}.",
            "{tabagisme sevré depuis 2015}.",
            "{tabac : un paquet par jour}.",
            "{pas de tabac}.",
        ],
        32,
    );
    b.tp(
        e,
        "fumeur",
        &["{fumeur actif}.", "{ancienne fumeuse}.", "{non fumeur}."],
        11,
    );
    b.tp(
        e,
        "paquets",
        &["{40 paquets-année}.", "{sevré à 20 paquets-année}."],
        7,
    );
    b.fp(e, "tabac", &["consultation de tabacologie proposée."], 3);
}

fn physical_signs(b: &mut Builder) {
    let e = entity::PHYSICAL_SIGNS;
    b.category(e, "palpation", &["palpation"]);
    b.category(e, "hepatomegalie", &["hépatomégalie"]);
    b.category(e, "adenopathie", &["adénopathie"]);
    b.category(e, "oedeme", &["œdème"]);
    b.tp(
        e,
        "palpation",
        &["consultée pour {palpation d'une tumeur aux deux seins}."],
        1,
    );
    b.tp(
        e,
        "palpation",
        &[
            "{masse perçue à la palpation abdominale}.",
            "{palpation d'un nodule thyroïdien}.",
        ],
        4,
    );
    b.tp(
        e,
        "hepatomegalie",
        &[
            "{hépatomégalie ferme}.",
            "{hépatomégalie à trois travers de doigt}.",
        ],
        5,
    );
    b.tp(
        e,
        "adenopathie",
        &[
            "{adénopathie sus-claviculaire gauche}.",
            "{adénopathies axillaires}.",
        ],
        5,
    );
    b.tp(
        e,
        "oedeme",
        &["{œdème des membres inférieurs}.", "{œdème du bras droit}."],
        5,
    );
    b.uncaught(
        e,
        &[
            "{abdomen souple et indolore}.",
            "{auscultation pulmonaire claire}.",
            "{bruits du cœur réguliers}.",
            "{masse mammaire droite}.",
            "{ascite de moyenne abondance}.",
            "{ictère cutanéo-muqueux}.",
            "{splénomégalie}.",
            "{souffle systolique}.",
        ],
        53,
    );
    b.fp(e, "oedeme", &["œdème cérébral péri-lésionnel à l'irm."], 1);
    b.fp(e, "adenopathie", &["pas d'adénopathie au scanner."], 1);
}

fn histology_and_topography(b: &mut Builder) {
    let h = entity::HISTOLOGY;
    b.category(h, "adenocarcinome", &["adénocarcinome"]);
    b.category(h, "epidermoide", &["carcinome épidermoïde"]);
    b.category(h, "lymphome", &["lymphome"]);
    let t = entity::TOPOGRAPHY;
    b.category(t, "colon", &["côlon"]);
    b.category(t, "rectum", &["rectum"]);
    b.category(t, "lobe", &["lobe supérieur"]);

    b.shared(
        &[(h, "adenocarcinome"), (t, "colon")],
        "biopsie : {adénocarcinome du côlon droit}.",
    );
    b.tp(
        h,
        "adenocarcinome",
        &[
            "{adénocarcinome lieberkühnien moyennement différencié}.",
            "{adénocarcinome bien différencié}.",
        ],
        13,
    );
    b.tp(
        h,
        "epidermoide",
        &[
            "{carcinome épidermoïde infiltrant}.",
            "{carcinome épidermoïde kératinisant}.",
        ],
        12,
    );
    b.tp(
        h,
        "lymphome",
        &["{lymphome b diffus à grandes cellules}."],
        8,
    );
    b.uncaught(
        h,
        &[
            "{tumeur neuroendocrine bien différenciée}.",
            "{sarcome pléomorphe}.",
        ],
        6,
    );
    b.fp(
        h,
        "lymphome",
        &["pas d'argument histologique pour un lymphome."],
        4,
    );

    b.tp(
        t,
        "colon",
        &["{côlon sigmoïde}.", "{angle colique gauche du côlon}."],
        7,
    );
    b.tp(
        t,
        "rectum",
        &["{haut rectum}.", "{bas rectum à 4 cm de la marge}."],
        6,
    );
    b.tp(
        t,
        "lobe",
        &["{lobe supérieur droit}.", "{lobe supérieur gauche}."],
        6,
    );
    b.uncaught(
        t,
        &[
            "{pancréas céphalique}.",
            "{quadrant supéro-externe du sein gauche}.",
            "{œsophage distal}.",
        ],
        13,
    );
    b.fp(t, "colon", &["coloscopie : côlon sans particularité."], 2);
    b.fp(t, "rectum", &["rectum vide au toucher."], 1);
}

fn treatment_and_response(b: &mut Builder) {
    let e = entity::TREATMENT;
    b.category(e, "platine", &["carboplatine", "cisplatine"]);
    b.category(e, "folfox", &["folfox", "folfiri"]);
    b.category(e, "radiotherapie", &["radiothérapie"]);
    b.tp(
        e,
        "platine",
        &["{carboplatine paclitaxel}.", "{cisplatine hebdomadaire}."],
        14,
    );
    b.tp(
        e,
        "folfox",
        &["{chimiothérapie par folfox}.", "{folfiri bevacizumab}."],
        14,
    );
    b.tp(
        e,
        "radiotherapie",
        &[
            "{radiothérapie thoracique}.",
            "{radiothérapie pelvienne 50 gy}.",
        ],
        12,
    );
    b.uncaught(
        e,
        &["{hormonothérapie par tamoxifène}.", "{immunothérapie}."],
        5,
    );
    b.fp(
        e,
        "radiotherapie",
        &["radiothérapie non indiquée en rcp."],
        3,
    );
    b.fp(e, "platine", &["allergie au carboplatine signalée."], 2);

    let r = entity::CHEMO_RESPONSE;
    b.category(r, "reponse", &["réponse partielle", "réponse complète"]);
    b.category(r, "stabilite", &["stabilité"]);
    b.category(r, "progression", &["progression"]);
    b.tp(
        r,
        "reponse",
        &[
            "{réponse partielle après quatre cures}.",
            "{réponse complète}.",
        ],
        12,
    );
    b.tp(r, "stabilite", &["{stabilité lésionnelle}."], 8);
    b.tp(r, "progression", &["{progression sous chimiothérapie}."], 7);
    b.uncaught(r, &["{diminution de taille des lésions cibles}."], 3);
    b.fp(r, "stabilite", &["stabilité hémodynamique."], 2);
}

fn remaining(b: &mut Builder) {
    let a = entity::HISTORY;
    b.category(a, "hta", &["hypertension"]);
    b.tp(
        a,
        "hta",
        &[
            "{hypertension artérielle traitée}.",
            "{hypertension artérielle ancienne}.",
        ],
        10,
    );
    b.uncaught(
        a,
        &[
            "{diabète de type 2}.",
            "{insuffisance rénale chronique}.",
            "{fibrillation auriculaire}.",
            "{démence débutante}.",
            "{bpco}.",
        ],
        20,
    );
    b.fp(a, "hta", &["hypertension portale sur le scanner."], 1);

    let p = entity::PERFORMANCE;
    b.category(p, "oms", &["oms"]);
    b.category(p, "ecog", &["ecog"]);
    b.category(p, "karnofsky", &["karnofsky"]);
    b.tp(p, "oms", &["{oms 1}.", "{oms 0}."], 12);
    b.tp(p, "ecog", &["{ecog 1}.", "{ecog 0}."], 11);
    b.tp(
        p,
        "karnofsky",
        &["{karnofsky 80 %}.", "{karnofsky 90 %}."],
        10,
    );
    b.uncaught(p, &["{patient autonome à domicile}."], 2);
    b.fp(p, "oms", &["classification oms des tumeurs."], 1);

    let bio = entity::BIOMARKERS;
    b.category(bio, "kras", &["kras"]);
    b.category(bio, "egfr", &["egfr"]);
    b.category(bio, "pdl1", &["pd-l1"]);
    b.tp(bio, "kras", &["{kras muté}.", "{kras sauvage}."], 6);
    b.tp(bio, "egfr", &["{mutation egfr exon 19}."], 6);
    b.tp(bio, "pdl1", &["{pd-l1 à 50 %}."], 6);
    b.uncaught(
        bio,
        &[
            "{her2 positif}.",
            "{statut msi}.",
            "{braf v600e}.",
            "{alk réarrangé}.",
        ],
        10,
    );
    b.fp(
        bio,
        "egfr",
        &["demande de recherche egfr transmise au laboratoire."],
        2,
    );

    let s = entity::SYMPTOMS;
    b.category(s, "douleur", &["douleur"]);
    b.category(s, "asthenie", &["asthénie"]);
    b.category(s, "dyspnee", &["dyspnée"]);
    b.tp(
        s,
        "douleur",
        &["{douleurs abdominales}.", "{douleur thoracique}."],
        5,
    );
    b.tp(s, "asthenie", &["{asthénie marquée}."], 5);
    b.tp(s, "dyspnee", &["{dyspnée d'effort}."], 5);
    b.uncaught(
        s,
        &[
            "{amaigrissement de 8 kg}.",
            "{toux sèche}.",
            "{nausées}.",
            "{anorexie}.",
            "{fièvre vespérale}.",
        ],
        21,
    );
    b.fp(s, "douleur", &["échelle de douleur non renseignée."], 1);
    b.fp(s, "dyspnee", &["absence de dyspnée."], 1);

    b.uncaught(
        entity::PROGRESSION,
        &[
            "{majoration des lésions hépatiques}.",
            "{apparition de nouvelles cibles}.",
            "{augmentation du ca 19-9}.",
            "{évolution tumorale locale}.",
            "{croissance rapide du nodule}.",
            "{élévation des marqueurs}.",
            "{extension vers le péritoine}.",
            "{maladie évolutive}.",
            "{récidive ganglionnaire}.",
            "{aggravation radiologique nette}.",
            "{poussée évolutive}.",
            "{échappement thérapeutique}.",
        ],
        12,
    );

    b.plain("dossier présenté au comité des tumeurs thoraciques.");
    b.plain("compte rendu dicté et validé.");
}

/// Pseudo-words of the form consonant-vowel x3, which no category term
/// in this fixture starts with.
fn pseudo_word(index: usize) -> String {
    const CONSONANTS: &[u8] = b"bdfglprv";
    const VOWELS: &[u8] = b"aiou";
    let mut n = index;
    let mut w = String::with_capacity(6);
    for _ in 0..3 {
        let syl = n % 32;
        n /= 32;
        w.push(CONSONANTS[syl / 4] as char);
        w.push(VOWELS[syl % 4] as char);
    }
    w
}

/// Appends filler tokens to an entity's highlights so its transformed
/// homogeneity lands as close as possible to `target`.
fn pad_entity(segments: &mut [Segment], entity: &str, entity_index: usize, target: f64) {
    let params = SigmoidParams::default();
    let mut tokens = Vec::new();
    for piece in segments.iter().flatten() {
        if let Mark::Highlight(tags) = &piece.mark {
            if tags.contains(&entity) {
                tokens.extend(token_strings(&normalize(&piece.text)));
            }
        }
    }
    let known: HashSet<&String> = tokens.iter().collect();
    let (t0, u0) = (tokens.len(), known.len());

    // (repeats of one filler word, fresh filler words)
    let mut best = (0usize, 0usize, f64::INFINITY);
    for r in 0..=400usize {
        for u in 0..=400usize {
            let total = t0 + r + u;
            let unique = u0 + u + usize::from(r > 0);
            let score = params.apply((total - unique) as f64 / total as f64);
            let err = (score - target).abs();
            if err < best.2 - 1e-12 {
                best = (r, u, err);
            }
        }
    }
    let (repeats, fresh, _) = best;

    let mut words = Vec::with_capacity(repeats + fresh);
    let mut next = entity_index * 1000;
    let mut draw = || loop {
        let w = pseudo_word(next);
        next += 1;
        if !known.contains(&w) {
            return w;
        }
    };
    let repeated = draw();
    words.extend(std::iter::repeat_n(repeated, repeats));
    words.extend((0..fresh).map(|_| draw()));

    let mut slots: Vec<&mut Piece> = segments
        .iter_mut()
        .flatten()
        .filter(|p| matches!(&p.mark, Mark::Highlight(tags) if tags.as_slice() == [entity]))
        .collect();
    let n = slots.len();
    for (i, w) in words.into_iter().enumerate() {
        let piece = &mut slots[i % n];
        piece.text.push(' ');
        piece.text.push_str(&w);
    }
}

impl Fixture {
    pub fn build() -> Self {
        let mut b = Builder::default();
        metastatic(&mut b);
        smoking(&mut b);
        physical_signs(&mut b);
        histology_and_topography(&mut b);
        treatment_and_response(&mut b);
        remaining(&mut b);

        for (i, (e, target)) in HOMOGENEITY_TARGETS.iter().enumerate() {
            pad_entity(&mut b.segments, e, i, *target);
        }

        // interleave entities across documents
        let n = b.segments.len();
        let stride = (1..n)
            .map(|k| 7919 + k)
            .find(|s| gcd(*s, n) == 1)
            .unwrap_or(1);
        let mut docs: Vec<(String, Vec<HighlightSpan>, Vec<MissedSpan>)> = (0..DOC_COUNT)
            .map(|_| (String::new(), Vec::new(), Vec::new()))
            .collect();
        for j in 0..n {
            let seg = &b.segments[(j * stride) % n];
            let d = j % DOC_COUNT;
            let doc_id = doc_name(d);
            let (text, spans, missed) = &mut docs[d];
            let mut pos = text.chars().count();
            for piece in seg {
                let len = piece.text.chars().count();
                match &piece.mark {
                    Mark::Plain => {}
                    Mark::Highlight(tags) => {
                        for e in tags {
                            spans.push(HighlightSpan {
                                doc_id: doc_id.clone(),
                                entity: (*e).to_owned(),
                                start: pos,
                                end: pos + len,
                                surface: piece.text.clone(),
                                origin: Origin::Expert,
                            });
                        }
                    }
                    Mark::Missed(e, cat) => missed.push(MissedSpan {
                        doc_id: doc_id.clone(),
                        entity: (*e).to_owned(),
                        category_id: (*cat).to_owned(),
                        start: pos,
                        end: pos + len,
                    }),
                }
                text.push_str(&piece.text);
                pos += len;
            }
            text.push('\n');
        }

        let mut spans = Vec::new();
        let mut missed = Vec::new();
        let mut texts = Vec::new();
        for (i, (text, s, m)) in docs.into_iter().enumerate() {
            texts.push((doc_name(i), text));
            spans.extend(s);
            missed.extend(m);
        }
        let categories = b
            .categories
            .into_iter()
            .map(|(e, defs)| EntityCategories {
                entity: e.to_owned(),
                categories: defs,
            })
            .collect();
        let expected = b
            .expected
            .into_iter()
            .map(|((e, cat), (tp, fp, missed))| ExpectedCounts {
                entity: e.to_owned(),
                category_id: cat.to_owned(),
                tp,
                fp,
                missed,
            })
            .collect();
        Self {
            corpus: Corpus::from_texts(texts),
            expert: HighlightStore::new(spans),
            categories,
            missed,
            expected,
        }
    }

    pub fn expected_for(&self, entity: &str, category_id: &str) -> Option<&ExpectedCounts> {
        self.expected
            .iter()
            .find(|x| x.entity == entity && x.category_id == category_id)
    }

    pub fn categories_of(&self, entity: &str) -> &[CategoryDef] {
        self.categories
            .iter()
            .find(|c| c.entity == entity)
            .map_or(&[], |c| c.categories.as_slice())
    }

    pub fn highlights_jsonl(&self) -> String {
        write_highlights(self.expert.spans())
    }

    /// Writes the reports as `<dir>/corpus/*.txt` and the highlights as
    /// `<dir>/highlights.jsonl`.
    pub fn write_to(&self, dir: &Path) -> io::Result<FixturePaths> {
        let corpus_dir = dir.join("corpus");
        fs::create_dir_all(&corpus_dir)?;
        for doc in self.corpus.documents() {
            fs::write(corpus_dir.join(doc.doc_id()), doc.raw_text())?;
        }
        let highlights = dir.join("highlights.jsonl");
        fs::write(&highlights, self.highlights_jsonl())?;
        Ok(FixturePaths {
            corpus_dir,
            highlights,
        })
    }

    /// A session with every entity's categories and no corrections.
    pub fn session(&self, paths: &FixturePaths) -> ProjectSession {
        let mut s = ProjectSession::new(&paths.corpus_dir, &paths.highlights);
        s.categories = self.categories.clone();
        s
    }

    /// In-memory workbench over the fixture, categories loaded.
    pub fn workbench(&self) -> Workbench {
        let paths = FixturePaths {
            corpus_dir: "corpus".into(),
            highlights: "highlights.jsonl".into(),
        };
        Workbench::open(
            Arc::new(self.corpus.clone()),
            Arc::new(self.expert.clone()),
            self.session(&paths),
        )
        .expect("fixture categories compile")
    }

    /// Ids of the current matches sitting exactly on the missed spans of
    /// `entity`.
    pub fn missed_match_ids(&self, matches: &[MatchRecord], entity: &str) -> Vec<String> {
        self.missed
            .iter()
            .filter(|m| m.entity == entity)
            .filter_map(|m| {
                matches
                    .iter()
                    .find(|r| {
                        r.doc_id == m.doc_id
                            && r.start == m.start
                            && r.end == m.end
                            && r.category_id == m.category_id
                    })
                    .map(|r| r.match_id.clone())
            })
            .collect()
    }
}

pub fn doc_name(index: usize) -> String {
    format!("cc_onco{:03}.txt", index + 1)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
