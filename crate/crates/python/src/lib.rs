//! Python bindings: key setup, the threshold ring signature round,
//! packet encoding, anonymity probabilities and the simulator.

use std::collections::HashSet;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyType};
use rand::rngs::OsRng;
use rand::{RngCore, SeedableRng, TryRngCore};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use vanet_trs::field::BinaryField;
use vanet_trs::itrs::{self, PlateGenerator, PreparedRequest, RequestOptions};
use vanet_trs::keys::{self, ExportSecrets};
use vanet_trs::sim::{self, SweepSpec};

create_exception!(vanet_trs_py, TrsError, PyException, "Any failure reported by the library.");
create_exception!(vanet_trs_py, Rejected, TrsError, "An announcement or fraction failed verification.");

fn err(e: impl std::fmt::Display) -> PyErr {
    TrsError::new_err(e.to_string())
}

fn rng(seed: Option<u64>) -> ChaCha20Rng {
    match seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::seed_from_u64(OsRng.unwrap_err().next_u64()),
    }
}

/// Element of GF(2^256).
#[pyclass(frozen, eq, hash, skip_from_py_object, module = "vanet_trs_py")]
#[derive(Clone, PartialEq, Eq, Hash)]
struct Gf256(vanet_trs::Gf256);

#[pymethods]
impl Gf256 {
    /// From a non-negative integer below 2^256.
    #[new]
    fn new(value: num_bigint::BigUint) -> PyResult<Self> {
        let mut be = value.to_bytes_be();
        if be.len() > 32 {
            return Err(PyValueError::new_err("value exceeds 256 bits"));
        }
        let mut bytes = vec![0u8; 32 - be.len()];
        bytes.append(&mut be);
        Ok(Gf256(vanet_trs::Gf256::from_bytes(bytes.as_slice().try_into().unwrap())))
    }

    #[classmethod]
    fn from_bytes(_cls: &Bound<'_, PyType>, data: &[u8]) -> PyResult<Self> {
        let arr: &[u8; 32] = data
            .try_into()
            .map_err(|_| PyValueError::new_err("expected 32 bytes"))?;
        Ok(Gf256(vanet_trs::Gf256::from_bytes(arr)))
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.to_bytes())
    }

    fn __int__(&self) -> num_bigint::BigUint {
        num_bigint::BigUint::from_bytes_be(&self.0.to_bytes())
    }

    fn __add__(&self, other: &Self) -> Self {
        Gf256(self.0 + other.0)
    }

    fn __mul__(&self, other: &Self) -> Self {
        Gf256(self.0 * other.0)
    }

    fn inverse(&self) -> PyResult<Self> {
        self.0.inv().map(Gf256).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("Gf256(0x{})", hex(&self.0.to_bytes()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Public system parameters.
#[pyclass(frozen, skip_from_py_object, module = "vanet_trs_py")]
#[derive(Clone)]
struct Params(keys::SystemParams);

#[pymethods]
impl Params {
    #[classmethod]
    fn from_bytes(_cls: &Bound<'_, PyType>, data: &[u8]) -> PyResult<Self> {
        keys::SystemParams::from_bytes(data).map(Params).map_err(err)
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.to_bytes())
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    /// Compressed public key of `identity`.
    fn public_key<'py>(&self, py: Python<'py>, identity: &str) -> Bound<'py, PyBytes> {
        let pk = keys::derive_public(&self.0, identity);
        PyBytes::new(py, &self.0.curve().compress(&pk))
    }
}

/// The trusted authority's master key material.
#[pyclass(frozen, module = "vanet_trs_py")]
struct Authority(keys::MasterKeyMaterial);

#[pymethods]
impl Authority {
    #[new]
    #[pyo3(signature = (seed, n = 256))]
    fn new(seed: u64, n: usize) -> PyResult<Self> {
        keys::setup(n, seed).map(|(m, _)| Authority(m)).map_err(err)
    }

    #[classmethod]
    fn from_bytes(_cls: &Bound<'_, PyType>, data: &[u8]) -> PyResult<Self> {
        keys::MasterKeyMaterial::from_bytes(data).map(Authority).map_err(err)
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.to_bytes(ExportSecrets))
    }

    fn params(&self) -> Params {
        Params(self.0.params())
    }

    /// Private key for `identity`. `collusion_resistant` keys carry a fresh
    /// randomizer drawn from `seed`.
    #[pyo3(signature = (identity, collusion_resistant = false, seed = None))]
    fn issue(&self, identity: &str, collusion_resistant: bool, seed: Option<u64>) -> IdentityKey {
        let key = if collusion_resistant {
            keys::derive_private_v2(&self.0, identity, &mut rng(seed))
        } else {
            keys::derive_private(&self.0, identity)
        };
        IdentityKey(key)
    }
}

#[pyclass(frozen, skip_from_py_object, module = "vanet_trs_py")]
#[derive(Clone)]
struct IdentityKey(keys::IdentityKey);

#[pymethods]
impl IdentityKey {
    #[getter]
    fn id(&self) -> &str {
        self.0.id()
    }

    #[getter]
    fn collusion_resistant(&self) -> bool {
        self.0.variant_point().is_some()
    }

    fn __repr__(&self) -> String {
        format!("IdentityKey({:?})", self.0.id())
    }
}

/// A signature request broadcast by the initiator.
#[pyclass(frozen, module = "vanet_trs_py")]
struct Request {
    params: keys::SystemParams,
    prepared: PreparedRequest,
}

impl Request {
    fn wrap(params: &keys::SystemParams, req: &vanet_trs::SignRequest, check: bool) -> PyResult<Self> {
        let prepared = if check {
            PreparedRequest::check(params, req)
        } else {
            PreparedRequest::trusted(params, req)
        }
        .map_err(|e| Rejected::new_err(e.to_string()))?;
        Ok(Request {
            params: params.clone(),
            prepared,
        })
    }
}

#[pymethods]
impl Request {
    /// Builds a request for `msg` with threshold `t` over a ring of `r`.
    #[classmethod]
    #[pyo3(signature = (params, msg, t, r, collusion_resistant = false, seed = None))]
    fn build(
        _cls: &Bound<'_, PyType>,
        params: &Params,
        msg: &[u8],
        t: u32,
        r: u32,
        collusion_resistant: bool,
        seed: Option<u64>,
    ) -> PyResult<Self> {
        let options = RequestOptions {
            collusion_resistant,
            ephemeral_pk: None,
        };
        let req = itrs::build_request_with(&params.0, msg, t, r, &options, &mut PlateGenerator::new(), &mut rng(seed))
            .map_err(err)?;
        Self::wrap(&params.0, &req, false)
    }

    /// Decodes a received request and checks its fake members.
    #[classmethod]
    fn from_bytes(_cls: &Bound<'_, PyType>, params: &Params, data: &[u8]) -> PyResult<Self> {
        let req = vanet_trs::SignRequest::from_bytes(params.0.curve(), data).map_err(err)?;
        Self::wrap(&params.0, &req, true)
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.prepared.request().to_bytes(self.params.curve()))
    }

    #[getter]
    fn t(&self) -> u32 {
        self.prepared.request().t
    }

    #[getter]
    fn r(&self) -> u32 {
        self.prepared.request().r
    }

    #[getter]
    fn msg<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.prepared.request().msg)
    }

    /// Identities of the forged ring members.
    fn fake_ids(&self) -> Vec<String> {
        self.prepared.request().fakes.iter().map(|f| f.id.clone()).collect()
    }

    #[pyo3(signature = (key, seed = None))]
    fn reply(&self, key: &IdentityKey, seed: Option<u64>) -> PyResult<Fraction> {
        self.prepared
            .reply(&self.params, &key.0, &HashSet::new(), &mut rng(seed))
            .map(Fraction)
            .map_err(err)
    }

    /// Raises `Rejected` with the reason when `fraction` is unusable.
    fn validate(&self, fraction: &Fraction) -> PyResult<()> {
        self.prepared
            .validate(&self.params, &fraction.0)
            .map_err(|e| Rejected::new_err(e.to_string()))
    }

    /// Combines the initiator's signature with `t - 1` usable fractions.
    #[pyo3(signature = (key, fractions, seed = None))]
    fn assemble(&self, key: &IdentityKey, fractions: Vec<PyRef<'_, Fraction>>, seed: Option<u64>) -> PyResult<Announcement> {
        let fractions: Vec<vanet_trs::SignFraction> = fractions.iter().map(|f| f.0.clone()).collect();
        let ann = self
            .prepared
            .assemble(&self.params, &key.0, &fractions, &mut rng(seed))
            .map_err(err)?;
        Ok(Announcement(ann))
    }
}

/// One replier's signature fraction.
#[pyclass(frozen, skip_from_py_object, module = "vanet_trs_py")]
#[derive(Clone)]
struct Fraction(vanet_trs::SignFraction);

#[pymethods]
impl Fraction {
    #[classmethod]
    fn from_bytes(_cls: &Bound<'_, PyType>, params: &Params, data: &[u8]) -> PyResult<Self> {
        vanet_trs::SignFraction::from_bytes(params.0.curve(), data)
            .map(Fraction)
            .map_err(err)
    }

    fn to_bytes<'py>(&self, py: Python<'py>, params: &Params) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.to_bytes(params.0.curve()))
    }

    #[getter]
    fn replier_id(&self) -> &str {
        &self.0.replier_id
    }

    #[getter]
    fn gamma(&self) -> Gf256 {
        Gf256(self.0.gamma)
    }
}

/// A finished ring announcement.
#[pyclass(frozen, skip_from_py_object, module = "vanet_trs_py")]
#[derive(Clone)]
struct Announcement(vanet_trs::RingAnnouncement);

#[pymethods]
impl Announcement {
    #[classmethod]
    fn from_bytes(_cls: &Bound<'_, PyType>, params: &Params, data: &[u8]) -> PyResult<Self> {
        vanet_trs::RingAnnouncement::from_bytes(params.0.curve(), data)
            .map(Announcement)
            .map_err(err)
    }

    fn to_bytes<'py>(&self, py: Python<'py>, params: &Params) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.to_bytes(params.0.curve()))
    }

    #[getter]
    fn t(&self) -> u32 {
        self.0.t
    }

    #[getter]
    fn r(&self) -> u32 {
        self.0.r()
    }

    #[getter]
    fn msg<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.msg)
    }

    /// Ring member identities in announcement order.
    fn ring_ids(&self) -> Vec<String> {
        self.0.entries.iter().map(|e| e.id.clone()).collect()
    }

    fn verify(&self, params: &Params) -> bool {
        itrs::verify_ring(&params.0, &self.0).is_ok()
    }

    /// Like `verify` but raises `Rejected` with the reason.
    fn check(&self, params: &Params) -> PyResult<()> {
        itrs::verify_ring(&params.0, &self.0).map_err(|e| Rejected::new_err(e.to_string()))
    }
}

/// Probability that a uniformly chosen t-subset of an r-ring holds at
/// least `j` real signers, as a `fractions.Fraction`.
#[pyfunction]
fn anonymity_prob_exact<'py>(py: Python<'py>, t: u32, r: u32, j: u32) -> PyResult<Bound<'py, PyAny>> {
    let p = sim::anonymity_prob_exact(t, r, j).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("fractions")?
        .getattr("Fraction")?
        .call1((p.numer().clone(), p.denom().clone()))
}

#[pyfunction]
fn anonymity_prob(t: u32, r: u32, j: u32) -> PyResult<f64> {
    sim::anonymity_prob(t, r, j).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_python<'py>(py: Python<'py>, rows: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(rows).map_err(err)?;
    py.import("json")?.getattr("loads")?.call1((text,))
}

/// Runs the sweep described by a TOML scenario and returns
/// `(summaries, runs)` as lists of dicts.
#[pyfunction]
#[pyo3(signature = (config, runs = None))]
fn simulate<'py>(py: Python<'py>, config: &str, runs: Option<u32>) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let mut spec = SweepSpec::from_config(config).map_err(|e| PyValueError::new_err(e.to_string()))?;
    if let Some(n) = runs {
        spec.axes.runs = n;
    }
    let (summaries, all_runs) = py.detach(|| {
        let mut summaries = Vec::new();
        let mut all_runs = Vec::new();
        for cell in spec.cells() {
            let r = sim::run_batch(&cell, spec.axes.runs);
            summaries.push(sim::CellSummary::from_runs(&cell, &r));
            all_runs.extend(r);
        }
        (summaries, all_runs)
    });
    Ok((to_python(py, &summaries)?, to_python(py, &all_runs)?))
}

#[pymodule]
fn vanet_trs_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TrsError", m.py().get_type::<TrsError>())?;
    m.add("Rejected", m.py().get_type::<Rejected>())?;
    m.add_class::<Gf256>()?;
    m.add_class::<Params>()?;
    m.add_class::<Authority>()?;
    m.add_class::<IdentityKey>()?;
    m.add_class::<Request>()?;
    m.add_class::<Fraction>()?;
    m.add_class::<Announcement>()?;
    m.add_function(wrap_pyfunction!(anonymity_prob, m)?)?;
    m.add_function(wrap_pyfunction!(anonymity_prob_exact, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
