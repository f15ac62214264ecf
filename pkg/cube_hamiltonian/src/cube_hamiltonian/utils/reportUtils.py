import json
import logging
from pathlib import Path
from typing import Optional, Union

from pydantic import BaseModel

from cube_hamiltonian.lattice import Configuration
from cube_hamiltonian.statics import static_energy
from cube_hamiltonian.types import ConfigurationReport, SiteSymbol, Sublattice

logger = logging.getLogger(__name__)


def report_json(report: BaseModel) -> str:
    return report.model_dump_json(indent=2, by_alias=True)


def write_report(report: BaseModel, path: Optional[Union[str, Path]]) -> Optional[Path]:
    """Write the report as JSON; "-" prints it instead."""
    if path is None:
        return None
    text = report_json(report)
    if str(path) == "-":
        print(text)
        return None
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    logger.info("report written to %s", path)
    return path


def read_report(path: Union[str, Path]) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def configuration_report(config: Configuration, edge_program: Optional[str] = None) -> ConfigurationReport:
    """Face sites and their symbols; black sites are left out."""
    sites = [
        SiteSymbol(sub=site.sublattice, cell=site.cell, axis=site.axis, symbol=symbol)
        for site, symbol in config.items()
        if site.sublattice is not Sublattice.BLACK
    ]
    energy = static_energy(config)
    return ConfigurationReport(dims=config.dims, energy=str(energy), edge_program=edge_program, sites=sites)


def load_configuration(path: Union[str, Path]) -> Configuration:
    with open(path, "r", encoding="utf-8") as f:
        report = ConfigurationReport.model_validate_json(f.read())
    mapping = {entry.to_site(): entry.symbol for entry in report.sites}
    return Configuration.from_mapping(report.dims, mapping)
