"""
Configuración del logging de hyperdist

Descripción:
    Configura el sistema de logging con un formato común para todos los
    módulos. Cada módulo crea su propio logger con logging.getLogger(__name__).
    Los mensajes van a stderr: stdout queda reservado para el JSON de la CLI.

Mas info: https://docs.python.org/es/3/howto/logging.html
"""

import logging
import sys
from typing import Optional

LOG_FORMAT: str = '%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s'
DATE_FORMAT: str = '%Y-%m-%d %H:%M:%S'

LEVELS: dict[str, int] = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
    "CRITICAL": logging.CRITICAL,
}


def configure_logging(level: int | str = logging.WARNING, log_file: Optional[str] = None) -> None:
    """
    Configura el sistema de logging con formato personalizado.

    Args:
        level: Nivel mínimo (entero de logging o nombre: "DEBUG", "INFO", ...)
        log_file: Si se especifica, guarda los logs en un archivo además de stderr
    """
    if isinstance(level, str):
        level = LEVELS[level.upper()]

    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]

    if log_file:
        handlers.append(logging.FileHandler(log_file, mode='w', encoding='utf-8'))

    # force=True: la CLI puede configurarse varias veces en el mismo proceso (tests)
    logging.basicConfig(
        level=level,
        format=LOG_FORMAT,
        datefmt=DATE_FORMAT,
        handlers=handlers,
        force=True,
    )
    logging.getLogger(__name__).debug(f"Logging configurado: nivel={logging.getLevelName(level)}, archivo={log_file}")
