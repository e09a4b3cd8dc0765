# Pacote numérico do laboratório de frentes aceleradas Fisher-KPP
