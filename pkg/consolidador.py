#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Consolidador de Artefatos
=========================

Gera o manifest.json de um diretório de resultados (hash de cada arquivo)
e consolida os relatórios de uma varredura de parâmetros.
"""

import os
import sys
import json
import hashlib
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Any, Optional

VERSAO_SISTEMA = "1.0.0-kpp-front"
MANIFEST = "manifest.json"
RESUMO_VARREDURA = "varredura_resumo.json"


class ArtifactConsolidator:
    """Consolidador dos artefatos de uma execução"""

    def __init__(self, output_dir: str):
        self.output_dir = Path(output_dir)

    @staticmethod
    def hash_file(path: Path) -> str:
        """SHA-256 do conteúdo do arquivo"""
        digest = hashlib.sha256()
        with open(path, 'rb') as f:
            for block in iter(lambda: f.read(1 << 16), b''):
                digest.update(block)
        return digest.hexdigest()

    def collect_files(self) -> List[Path]:
        """Todos os arquivos de saída, exceto o próprio manifest"""
        return sorted(
            p for p in self.output_dir.rglob('*')
            if p.is_file() and p.name != MANIFEST
        )

    def write_manifest(self, experiment: str, status: str,
                       extra: Optional[Dict[str, Any]] = None) -> Path:
        """Escreve manifest.json com metadata e hash de cada arquivo"""
        arquivos = {
            p.relative_to(self.output_dir).as_posix(): self.hash_file(p)
            for p in self.collect_files()
        }

        manifest = {
            'metadata': {
                'timestamp_execucao': datetime.now().isoformat(),
                'versao_sistema': VERSAO_SISTEMA,
                'experimento': experiment,
                'status': status,
                'total_arquivos': len(arquivos)
            },
            'arquivos': arquivos
        }
        if extra:
            manifest['metadata'].update(extra)

        path = self.output_dir / MANIFEST
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(manifest, f, ensure_ascii=False, indent=2, sort_keys=True)

        print(f"Manifest salvo: {path} ({len(arquivos)} arquivos)")
        return path

    def load_report(self, run_dir: Path) -> Optional[Dict[str, Any]]:
        """Carrega report.json de uma subexecução"""
        report_file = run_dir / 'report.json'
        if not report_file.exists():
            print(f"Nenhum relatório em {run_dir}")
            return None

        try:
            with open(report_file, 'r', encoding='utf-8') as f:
                return json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            print(f"Erro ao carregar {report_file}: {e}")
            return None

    def consolidate_sweep(self) -> Optional[Path]:
        """Resumo de todas as subexecuções de uma varredura"""
        print("CONSOLIDANDO VARREDURA")
        print("=" * 50)

        execucoes = {}
        for run_dir in sorted(p for p in self.output_dir.iterdir() if p.is_dir()):
            report = self.load_report(run_dir)
            if report is None:
                execucoes[run_dir.name] = {'pass': False, 'erro': 'relatório ausente'}
                continue
            execucoes[run_dir.name] = {
                'teorema': report.get('theorem'),
                'parametros': report.get('parameters', {}),
                'pass': bool(report.get('pass'))
            }
            print(f"   {run_dir.name}: {'OK' if report.get('pass') else 'FALHOU'}")

        if not execucoes:
            print("Nenhuma subexecução encontrada")
            return None

        resumo = {
            'execucoes': execucoes,
            'resumo': {
                'total': len(execucoes),
                'aprovadas': sum(1 for e in execucoes.values() if e['pass'])
            }
        }

        path = self.output_dir / RESUMO_VARREDURA
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(resumo, f, ensure_ascii=False, indent=2, sort_keys=True)

        print(f"\nAprovadas: {resumo['resumo']['aprovadas']}/{resumo['resumo']['total']}")
        return path


def main():
    """Regenera o manifest de um diretório de resultados existente"""
    if len(sys.argv) != 2 or not os.path.isdir(sys.argv[1]):
        print("Uso: python consolidador.py <diretorio_de_resultados>")
        return 2

    consolidator = ArtifactConsolidator(sys.argv[1])
    if any(p.is_dir() for p in consolidator.output_dir.iterdir()):
        consolidator.consolidate_sweep()
    consolidator.write_manifest(experiment='reconsolidado', status='desconhecido')
    return 0


if __name__ == "__main__":
    sys.exit(main())
