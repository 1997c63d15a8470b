//! Representation ingestion: parse generator documents, validate symmetry
//! tags, close the generators into a Lie algebra orthonormal for the real
//! trace form, and extract torus weight data.
//!
//! The algebra basis is ordered so that the orthonormalized torus directions
//! come first, then the remaining Hermitian directions, then the
//! anti-Hermitian ones. The Cartan involution therefore acts by a sign flip
//! on the leading Hermitian block, and all index sets are contiguous ranges.

use std::collections::BTreeSet;

use serde::Deserialize;
use thiserror::Error;

use crate::linalg::{
    cluster_desc, commutator, herm_eigen, herm_error, herm_part, hstack, max_abs,
    phase_canonicalize, project_out_mats, skew_error, skew_part, trace_inner, trace_norm, CMat,
    CVec, RVec,
};
use crate::tol;

#[derive(Debug, Error)]
pub enum RepError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("generator '{name}' violates its '{tag}' symmetry tag (residual {residual:.3e})")]
    HermiticityViolation {
        name: String,
        tag: String,
        residual: f64,
    },
    #[error("torus generators '{a}' and '{b}' do not commute (residual {residual:.3e})")]
    NonCommutingTorus { a: String, b: String, residual: f64 },
    #[error("bracket closure exceeded the dimension cap {cap}")]
    ClosureOverflow { cap: usize },
}

impl RepError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            RepError::MalformedDocument(_) => "malformed_document",
            RepError::HermiticityViolation { .. } => "hermiticity_violation",
            RepError::NonCommutingTorus { .. } => "non_commuting_torus",
            RepError::ClosureOverflow { .. } => "closure_overflow",
        }
    }
}

/// Symmetry tag of a generator: `P` for Hermitian directions (the noncompact
/// part), `K` for anti-Hermitian ones (the compact part).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    P,
    K,
}

/// One validated input generator.
#[derive(Debug, Clone)]
pub struct Generator {
    pub name: String,
    pub matrix: CMat,
    pub tag: Tag,
}

/// Orthonormal basis of the closed Lie algebra together with its structure
/// constants `[e_i, e_j] = sum_k c[i][j][k] e_k`.
#[derive(Debug, Clone)]
pub struct AlgebraBasis {
    pub elements: Vec<CMat>,
    pub bracket_table: Vec<Vec<Vec<f64>>>,
    pub p_indices: Vec<usize>,
    pub k_indices: Vec<usize>,
    pub a_indices: Vec<usize>,
}

impl AlgebraBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Structure-constant expansion of `[u, v]` for coordinate vectors over
    /// this basis.
    pub fn bracket_coords(&self, u: &RVec, v: &RVec) -> RVec {
        let d = self.dim();
        let mut out = RVec::zeros(d);
        for i in 0..d {
            if u[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                if v[j] == 0.0 {
                    continue;
                }
                let c = u[i] * v[j];
                for k in 0..d {
                    out[k] += c * self.bracket_table[i][j][k];
                }
            }
        }
        out
    }

    /// Matrix of `ad(b)` acting on basis coordinates, for `b` given in basis
    /// coordinates.
    pub fn ad_matrix(&self, b: &RVec) -> crate::linalg::RMat {
        let d = self.dim();
        crate::linalg::RMat::from_fn(d, d, |k, j| {
            let mut s = 0.0;
            for i in 0..d {
                if b[i] != 0.0 {
                    s += b[i] * self.bracket_table[i][j][k];
                }
            }
            s
        })
    }

    /// Cartan involution on basis coordinates: sign flip on the Hermitian
    /// block.
    pub fn theta_coords(&self, v: &RVec) -> RVec {
        let mut out = v.clone();
        for &i in &self.p_indices {
            out[i] = -out[i];
        }
        out
    }

    /// Reconstruct the matrix with the given basis coordinates.
    pub fn matrix_of(&self, coords: &RVec) -> CMat {
        let n = self.elements[0].nrows();
        let mut m = CMat::zeros(n, n);
        for (i, e) in self.elements.iter().enumerate() {
            if coords[i] != 0.0 {
                m += e.scale(coords[i]);
            }
        }
        m
    }

    /// Coordinates of a matrix lying in the algebra span.
    pub fn coords_of(&self, m: &CMat) -> RVec {
        RVec::from_fn(self.dim(), |i, _| trace_inner(&self.elements[i], m))
    }
}

/// A validated representation: the input generators plus the derived
/// orthonormal algebra data.
#[derive(Debug, Clone)]
pub struct RepresentationSpec {
    pub name: String,
    pub dim_v: usize,
    pub generators: Vec<Generator>,
    pub a_names: Vec<String>,
    pub p_names: Vec<String>,
    /// Input torus matrices in `a_basis` order; torus momentum coordinates
    /// and weights are reported against these exact matrices.
    pub a_input: Vec<CMat>,
    pub basis: AlgebraBasis,
}

impl RepresentationSpec {
    /// Number of orthonormal Hermitian basis directions (the `m` of momentum
    /// coordinates).
    pub fn p_dim(&self) -> usize {
        self.basis.p_indices.len()
    }

    /// Torus rank (the `r` of torus momentum coordinates).
    pub fn a_rank(&self) -> usize {
        self.a_input.len()
    }

    /// `k`-th orthonormal Hermitian basis element.
    pub fn p_element(&self, k: usize) -> &CMat {
        &self.basis.elements[self.basis.p_indices[k]]
    }

    /// Matrix of a direction given in orthonormal Hermitian coordinates.
    pub fn rho_p(&self, beta_p: &RVec) -> CMat {
        assert_eq!(beta_p.len(), self.p_dim(), "beta has wrong length");
        let mut m = CMat::zeros(self.dim_v, self.dim_v);
        for k in 0..self.p_dim() {
            if beta_p[k] != 0.0 {
                m += self.p_element(k).scale(beta_p[k]);
            }
        }
        m
    }

    /// Orthonormal Hermitian coordinates of a Hermitian matrix in the
    /// algebra.
    pub fn p_coords_of(&self, m: &CMat) -> RVec {
        RVec::from_fn(self.p_dim(), |k, _| trace_inner(self.p_element(k), m))
    }

    /// Convert a direction given in input torus coordinates (coefficients of
    /// the `a_basis` file matrices) to orthonormal Hermitian coordinates.
    pub fn input_a_to_p(&self, beta_a: &RVec) -> RVec {
        assert_eq!(beta_a.len(), self.a_rank(), "beta_a has wrong length");
        let mut m = CMat::zeros(self.dim_v, self.dim_v);
        for (j, h) in self.a_input.iter().enumerate() {
            if beta_a[j] != 0.0 {
                m += h.scale(beta_a[j]);
            }
        }
        self.p_coords_of(&m)
    }

    /// Full-basis coordinates of the Hermitian direction `beta_p`.
    pub fn p_to_full(&self, beta_p: &RVec) -> RVec {
        let mut out = RVec::zeros(self.basis.dim());
        for (k, &i) in self.basis.p_indices.iter().enumerate() {
            out[i] = beta_p[k];
        }
        out
    }
}

/// One joint eigenspace of the commuting torus matrices.
#[derive(Debug, Clone)]
pub struct WeightSpace {
    /// Joint eigenvalue vector, one coordinate per `a_basis` matrix.
    pub weight: RVec,
    /// Orthonormal basis of the eigenspace.
    pub basis: Vec<CVec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RepDoc {
    #[serde(default)]
    name: Option<String>,
    dim: usize,
    generators: Vec<GenDoc>,
    a_basis: Vec<String>,
    p_basis: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenDoc {
    name: String,
    tag: String,
    matrix: Vec<Vec<[f64; 2]>>,
}

fn parse_matrix(name: &str, dim: usize, rows: &[Vec<[f64; 2]>]) -> Result<CMat, RepError> {
    if rows.len() != dim {
        return Err(RepError::MalformedDocument(format!(
            "generator '{name}': expected {dim} rows, found {}",
            rows.len()
        )));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(RepError::MalformedDocument(format!(
                "generator '{name}': row {i} has {} entries, expected {dim}",
                row.len()
            )));
        }
        for e in row {
            if !e[0].is_finite() || !e[1].is_finite() {
                return Err(RepError::MalformedDocument(format!(
                    "generator '{name}': non-finite entry in row {i}"
                )));
            }
        }
    }
    Ok(CMat::from_fn(dim, dim, |i, j| {
        num_complex::Complex::new(rows[i][j][0], rows[i][j][1])
    }))
}

/// Parse and validate a representation document (JSON, see the schema in the
/// crate README).
pub fn load_representation(document: &str) -> Result<RepresentationSpec, RepError> {
    let doc: RepDoc =
        serde_json::from_str(document).map_err(|e| RepError::MalformedDocument(e.to_string()))?;
    if doc.dim == 0 {
        return Err(RepError::MalformedDocument("dim must be positive".into()));
    }
    if doc.dim > tol::DIM_V_CAP {
        return Err(RepError::MalformedDocument(format!(
            "dim {} exceeds the cap {}",
            doc.dim,
            tol::DIM_V_CAP
        )));
    }
    if doc.generators.is_empty() {
        return Err(RepError::MalformedDocument("empty generator list".into()));
    }

    let mut names = BTreeSet::new();
    let mut generators = Vec::with_capacity(doc.generators.len());
    for g in &doc.generators {
        if !names.insert(g.name.clone()) {
            return Err(RepError::MalformedDocument(format!(
                "duplicate generator name '{}'",
                g.name
            )));
        }
        let tag = match g.tag.as_str() {
            "p" => Tag::P,
            "k" => Tag::K,
            other => {
                return Err(RepError::MalformedDocument(format!(
                    "generator '{}': unknown tag '{other}' (expected \"p\" or \"k\")",
                    g.name
                )))
            }
        };
        let matrix = parse_matrix(&g.name, doc.dim, &g.matrix)?;
        let residual = match tag {
            Tag::P => herm_error(&matrix),
            Tag::K => skew_error(&matrix),
        };
        if residual >= tol::HERMITICITY {
            return Err(RepError::HermiticityViolation {
                name: g.name.clone(),
                tag: g.tag.clone(),
                residual,
            });
        }
        generators.push(Generator {
            name: g.name.clone(),
            matrix,
            tag,
        });
    }

    let find = |name: &str| generators.iter().find(|g| g.name == name);
    for name in doc.a_basis.iter().chain(doc.p_basis.iter()) {
        if find(name).is_none() {
            return Err(RepError::MalformedDocument(format!(
                "basis entry '{name}' names no generator"
            )));
        }
    }
    if doc.a_basis.is_empty() {
        return Err(RepError::MalformedDocument("a_basis must be nonempty".into()));
    }
    let p_set: BTreeSet<&str> = doc.p_basis.iter().map(String::as_str).collect();
    if doc.p_basis.len() != p_set.len() || doc.a_basis.len() != doc.a_basis.iter().collect::<BTreeSet<_>>().len() {
        return Err(RepError::MalformedDocument("duplicate basis entry".into()));
    }
    for name in &doc.a_basis {
        if !p_set.contains(name.as_str()) {
            return Err(RepError::MalformedDocument(format!(
                "a_basis entry '{name}' is not in p_basis"
            )));
        }
    }
    for name in &doc.p_basis {
        if find(name).unwrap().tag != Tag::P {
            return Err(RepError::MalformedDocument(format!(
                "p_basis entry '{name}' is not tagged \"p\""
            )));
        }
    }
    let tagged_p: BTreeSet<&str> = generators
        .iter()
        .filter(|g| g.tag == Tag::P)
        .map(|g| g.name.as_str())
        .collect();
    if tagged_p != p_set {
        return Err(RepError::MalformedDocument(
            "p_basis must list exactly the generators tagged \"p\"".into(),
        ));
    }

    let a_input: Vec<CMat> = doc
        .a_basis
        .iter()
        .map(|n| find(n).unwrap().matrix.clone())
        .collect();
    for i in 0..a_input.len() {
        for j in i + 1..a_input.len() {
            let residual = max_abs(&commutator(&a_input[i], &a_input[j]));
            if residual >= tol::TORUS_COMMUTE {
                return Err(RepError::NonCommutingTorus {
                    a: doc.a_basis[i].clone(),
                    b: doc.a_basis[j].clone(),
                    residual,
                });
            }
        }
    }

    // Seed the closure with the torus directions first so that the
    // orthonormalized torus block occupies the leading indices.
    let mut herm_seeds: Vec<CMat> = Vec::new();
    for n in &doc.a_basis {
        herm_seeds.push(find(n).unwrap().matrix.clone());
    }
    for n in &doc.p_basis {
        if !doc.a_basis.contains(n) {
            herm_seeds.push(find(n).unwrap().matrix.clone());
        }
    }
    let skew_seeds: Vec<CMat> = generators
        .iter()
        .filter(|g| g.tag == Tag::K)
        .map(|g| g.matrix.clone())
        .collect();

    // The torus matrices must be linearly independent for the input torus
    // coordinates to be well defined.
    {
        let mut ortho: Vec<CMat> = Vec::new();
        for (j, m) in a_input.iter().enumerate() {
            let r = project_out_mats(m, &ortho);
            let norm = trace_norm(&r);
            if norm <= tol::BRACKET_CLOSURE {
                return Err(RepError::MalformedDocument(format!(
                    "a_basis entry '{}' is linearly dependent on earlier entries",
                    doc.a_basis[j]
                )));
            }
            ortho.push(r.scale(1.0 / norm));
        }
    }

    let (herm, skew) = closure_split(&herm_seeds, &skew_seeds, tol::CLOSURE_CAP)?;

    // Tag consistency: brackets must not generate Hermitian directions
    // beyond the span of the tagged input.
    let input_p_rank = {
        let mut ortho: Vec<CMat> = Vec::new();
        for m in &herm_seeds {
            let r = project_out_mats(m, &ortho);
            let norm = trace_norm(&r);
            if norm > tol::BRACKET_CLOSURE {
                ortho.push(r.scale(1.0 / norm));
            }
        }
        ortho.len()
    };
    if herm.len() != input_p_rank {
        return Err(RepError::MalformedDocument(format!(
            "bracket closure generates {} Hermitian directions but the tagged input spans {}; \
             the p/k tagging is inconsistent",
            herm.len(),
            input_p_rank
        )));
    }

    let basis = assemble_basis(herm, skew, doc.a_basis.len());

    Ok(RepresentationSpec {
        name: doc.name.unwrap_or_default(),
        dim_v: doc.dim,
        generators,
        a_names: doc.a_basis,
        p_names: doc.p_basis,
        a_input,
        basis,
    })
}

/// Insert `m` into the orthonormal family `basis` unless it already lies in
/// the span.  Returns true when the family grew. Projects twice for
/// orthogonality quality.
fn gs_insert(basis: &mut Vec<CMat>, m: &CMat) -> bool {
    let r1 = project_out_mats(m, basis);
    if trace_norm(&r1) <= tol::BRACKET_CLOSURE {
        return false;
    }
    let r2 = project_out_mats(&r1, basis);
    let norm = trace_norm(&r2);
    if norm <= tol::BRACKET_CLOSURE {
        return false;
    }
    basis.push(r2.scale(1.0 / norm));
    true
}

/// Bracket-saturate the seeds, keeping Hermitian and anti-Hermitian parts in
/// separate orthonormal families (they are automatically orthogonal to each
/// other under the real trace form).
fn closure_split(
    herm_seeds: &[CMat],
    skew_seeds: &[CMat],
    cap: usize,
) -> Result<(Vec<CMat>, Vec<CMat>), RepError> {
    let mut herm: Vec<CMat> = Vec::new();
    let mut skew: Vec<CMat> = Vec::new();
    for m in herm_seeds {
        gs_insert(&mut herm, &herm_part(m));
        gs_insert(&mut skew, &skew_part(m));
    }
    for m in skew_seeds {
        gs_insert(&mut herm, &herm_part(m));
        gs_insert(&mut skew, &skew_part(m));
    }
    loop {
        if herm.len() + skew.len() > cap {
            return Err(RepError::ClosureOverflow { cap });
        }
        let all: Vec<CMat> = herm.iter().chain(skew.iter()).cloned().collect();
        let mut grew = false;
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                let b = commutator(&all[i], &all[j]);
                grew |= gs_insert(&mut herm, &herm_part(&b));
                grew |= gs_insert(&mut skew, &skew_part(&b));
                if herm.len() + skew.len() > cap {
                    return Err(RepError::ClosureOverflow { cap });
                }
            }
        }
        if !grew {
            break;
        }
    }
    Ok((herm, skew))
}

fn assemble_basis(herm: Vec<CMat>, skew: Vec<CMat>, a_count: usize) -> AlgebraBasis {
    let p_count = herm.len();
    let mut elements = herm;
    elements.extend(skew);
    let d = elements.len();
    let mut bracket_table = vec![vec![vec![0.0; d]; d]; d];
    for i in 0..d {
        for j in 0..d {
            if i == j {
                continue;
            }
            let b = commutator(&elements[i], &elements[j]);
            for k in 0..d {
                bracket_table[i][j][k] = trace_inner(&elements[k], &b);
            }
        }
    }
    AlgebraBasis {
        elements,
        bracket_table,
        p_indices: (0..p_count).collect(),
        k_indices: (p_count..d).collect(),
        a_indices: (0..a_count).collect(),
    }
}

/// Close a raw generator list under brackets. The returned basis is
/// orthonormal for the real trace form with the Hermitian block leading;
/// `a_indices` is left empty since no torus is designated.
pub fn lie_closure(generators: &[CMat]) -> Result<AlgebraBasis, RepError> {
    let herm_seeds: Vec<CMat> = generators.to_vec();
    let (herm, skew) = closure_split(&herm_seeds, &[], tol::CLOSURE_CAP)?;
    let mut basis = assemble_basis(herm, skew, 0);
    basis.a_indices = Vec::new();
    Ok(basis)
}

/// Simultaneously diagonalize the commuting torus matrices by recursive
/// eigenspace refinement. Weight spaces come back sorted by weight vector,
/// lexicographically descending, with orthonormal phase-canonical bases.
pub fn weight_decomposition(spec: &RepresentationSpec) -> Vec<WeightSpace> {
    let n = spec.dim_v;
    let id_cols: Vec<CVec> = (0..n)
        .map(|i| {
            let mut v = CVec::zeros(n);
            v[i] = num_complex::Complex::new(1.0, 0.0);
            v
        })
        .collect();
    let mut clusters: Vec<(Vec<f64>, Vec<CVec>)> = vec![(Vec::new(), id_cols)];
    for h in &spec.a_input {
        let mut next = Vec::new();
        for (weight, cols) in clusters {
            let q = hstack(&cols);
            let m = q.adjoint() * h * &q;
            let eig = herm_eigen(&m);
            let groups = cluster_desc(&eig.values, tol::CLUSTER_GAP);
            for (mean, members) in groups {
                let sub: Vec<CVec> = members
                    .iter()
                    .map(|&j| {
                        let mut v = CVec::from(&q * eig.vectors.column(j).into_owned());
                        phase_canonicalize(&mut v);
                        v
                    })
                    .collect();
                let mut w = weight.clone();
                w.push(mean);
                next.push((w, sub));
            }
        }
        clusters = next;
    }
    let mut spaces: Vec<WeightSpace> = clusters
        .into_iter()
        .map(|(w, basis)| WeightSpace {
            weight: RVec::from_vec(w),
            basis,
        })
        .collect();
    spaces.sort_by(|a, b| cmp_weights_desc(&a.weight, &b.weight));
    debug_assert_eq!(
        spaces.iter().map(|s| s.basis.len()).sum::<usize>(),
        n,
        "weight space dimensions must sum to N"
    );
    spaces
}

/// Lexicographic descending comparison of weight vectors with the cluster
/// gap as equality tolerance.
pub fn cmp_weights_desc(a: &RVec, b: &RVec) -> std::cmp::Ordering {
    for i in 0..a.len().min(b.len()) {
        let d = a[i] - b[i];
        if d.abs() > tol::CLUSTER_GAP {
            return if d > 0.0 {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            };
        }
    }
    std::cmp::Ordering::Equal
}
