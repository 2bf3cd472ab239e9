"""Generate the synthetic melanoma registry export used by the demo.

Five patients, each with a planted set of guideline violations (see
PLANTED). Output is deterministic for a given seed.

    python3 scripts/make_demo_corpus.py > demo/corpus/adt_export.xml
"""

from __future__ import annotations

import argparse
import random
import sys
import xml.etree.ElementTree as ET
from datetime import datetime, timedelta

DEPARTMENTS = ("dermatology", "surgery", "pathology", "oncology", "radiology", "radiotherapy")
SYSTEMS = ("his", "lis", "ris", "tumor_doc")

# which rule each patient violates in its first pass
PLANTED = {
    "P001": {"duplicate_diagnosis": 1, "no_board_protocol": True},
    "P002": {"icd_unspecific": True, "ldh_wrong_unit": 1, "thick_without_sentinel": True,
             "radiotherapy_without_indication": True},
    "P003": {"no_excision": True, "no_tumor_board": True, "late_imaging": True},
    "P004": {"radiotherapy": True, "thick": True},
    "P005": {"duplicate_diagnosis": 2, "ldh_wrong_unit": 2, "no_histology": True,
             "no_board_protocol": True},
}


class Builder:
    def __init__(self, rng: random.Random, patient: ET.Element, pid: str):
        self.rng = rng
        self.patient = patient
        self.pid = pid
        self.n = 0

    def record(self, kind: str, when: datetime, department: str, **fields) -> None:
        self.n += 1
        tag = "diagnosis" if kind == "Diagnosis" else "record"
        elem = ET.SubElement(self.patient, tag)
        if tag == "record":
            elem.set("type", kind)
        elem.set("date", when.strftime("%d.%m.%Y %H:%M"))
        ET.SubElement(elem, "record_id").text = f"{self.pid}-{self.n:03d}"
        ET.SubElement(elem, "department").text = department
        ET.SubElement(elem, "reporter").text = f"dr_{self.rng.randint(1, 40):02d}"
        ET.SubElement(elem, "source_system").text = self.rng.choice(SYSTEMS)
        ET.SubElement(elem, "tumor_id").text = f"{self.pid}-T1"
        for key, value in fields.items():
            ET.SubElement(elem, key).text = str(value)


def at(day: datetime, offset_days: int, rng: random.Random) -> datetime:
    return day + timedelta(days=offset_days, hours=rng.randint(8, 16), minutes=rng.choice((0, 15, 30, 45)))


def patient(root: ET.Element, pid: str, plan: dict, rng: random.Random) -> None:
    elem = ET.SubElement(root, "patient", patient_id=pid, birth_year=str(rng.randint(1940, 1990)))
    b = Builder(rng, elem, pid)
    d0 = datetime(2021, 1, 4) + timedelta(days=rng.randint(0, 300))
    thick = plan.get("thick") or plan.get("thick_without_sentinel")

    b.record("Referral", at(d0, 0, rng), "dermatology", referrer="gp", urgency="high",
             reason="suspicious naevus")
    icd = "C43" if plan.get("icd_unspecific") else "C43.9"
    b.record("Diagnosis", at(d0, 2, rng), "dermatology", icd_code=icd, laterality="left",
             site_text="trunk")
    for k in range(plan.get("duplicate_diagnosis", 0)):
        b.record("Diagnosis", at(d0, 4 + k, rng), "pathology", icd_code="C43.9", laterality="left",
                 site_text="trunk")
    if not plan.get("no_excision"):
        b.record("Excision", at(d0, 9, rng), "surgery", margin_mm=rng.choice((5.0, 10.0, 20.0)),
                 technique="wide local", complete="true")
    if not plan.get("no_histology"):
        b.record("Histology", at(d0, 12, rng), "pathology",
                 breslow_mm=round(rng.uniform(1.2, 3.5) if thick else rng.uniform(0.2, 0.9), 1),
                 ulceration=rng.choice(("true", "false")), mitoses=rng.randint(0, 6))
    if thick and not plan.get("thick_without_sentinel"):
        b.record("Sentinel_Biopsy", at(d0, 18, rng), "surgery", result="negative",
                 node_count=rng.randint(1, 3), side="left")
    b.record("Staging", at(d0, 21, rng), "oncology", t_stage="T2a" if thick else "T1a",
             n_stage="N0", m_stage="M0")
    first_imaging = 56 if plan.get("late_imaging") else 26
    b.record("Imaging", at(d0, first_imaging, rng), "radiology", modality="CT",
             region="thorax abdomen", finding="no metastasis")
    wrong_ldh = plan.get("ldh_wrong_unit", 0)
    b.record("LDH_Test", at(d0, 27, rng), "oncology", value=round(rng.uniform(120, 240), 1),
             unit="mmol/L" if wrong_ldh > 0 else "U/L", ref_upper=250.0)
    if not plan.get("no_tumor_board"):
        board = at(d0, 30, rng)
        b.record("Tumor_Board", board, "oncology", decision="adjuvant therapy",
                 participants=rng.randint(4, 9), chair="dr_01")
        if not plan.get("no_board_protocol"):
            b.record("Board_Protocol", board + timedelta(hours=1), "oncology", signed="true",
                     author="dr_02", pages=rng.randint(1, 4))
    b.record("Systemic_Therapy", at(d0, 40, rng), "oncology", substance="nivolumab",
             intent="adjuvant", cycle=1)
    if plan.get("radiotherapy") or plan.get("radiotherapy_without_indication"):
        indication = "none" if plan.get("radiotherapy_without_indication") else "adjuvant"
        b.record("Radiotherapy", at(d0, 45, rng), "radiotherapy", indication=indication,
                 dose_gy=48.0, fractions=20)

    cycles = rng.randint(4, 5)
    for c in range(cycles):
        base = 70 + 28 * c
        b.record("Systemic_Therapy", at(d0, base, rng), "oncology", substance="nivolumab",
                 intent="adjuvant", cycle=c + 2)
        b.record("LDH_Test", at(d0, base + 3, rng), "oncology", value=round(rng.uniform(120, 240), 1),
                 unit="mmol/L" if c + 1 < wrong_ldh else "U/L", ref_upper=250.0)
        b.record("Follow_Up", at(d0, base + 7, rng), "dermatology", status="no evidence of disease",
                 ecog=rng.randint(0, 1), next_visit=(d0 + timedelta(days=base + 35)).strftime("%Y-%m-%d"))
        b.record("Imaging", at(d0, base + 10, rng), "radiology", modality=rng.choice(("CT", "MRI", "US")),
                 region="lymph nodes", finding="stable")


def build(seed: int) -> ET.ElementTree:
    rng = random.Random(seed)
    root = ET.Element("adt_export", source="synthetic", standard="ADT/GEKID-like", seed=str(seed))
    for pid, plan in PLANTED.items():
        patient(root, pid, plan, rng)
    ET.indent(root)
    return ET.ElementTree(root)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=20220601)
    args = parser.parse_args()
    tree = build(args.seed)
    sys.stdout.buffer.write(ET.tostring(tree.getroot(), encoding="utf-8", xml_declaration=True) + b"\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
